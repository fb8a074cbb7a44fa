#include "aiprobe/env_template.hpp"

#include "aiprobe/errors.hpp"
#include "aiprobe/xml.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace aiprobe {

namespace {

    std::string trim(std::string_view s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return std::string(s.substr(b, e - b));
    }

    std::vector<std::string> split_commas(std::string_view s) {
        std::vector<std::string> parts;
        std::string current;
        for (char c : s) {
            if (c == ',') {
                parts.push_back(trim(current));
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        parts.push_back(trim(current));
        return parts;
    }

    std::int64_t parse_int_strict(const std::string& text, int line) {
        std::int64_t value = 0;
        const char* b = text.data();
        const char* e = b + text.size();
        auto res = std::from_chars(b, e, value);
        if (res.ec != std::errc{} || res.ptr != e) throw ParseError("'" + text + "' is not an integer", line);
        return value;
    }

    double parse_real_strict(const std::string& text, int line) {
        double value = 0.0;
        const char* b = text.data();
        const char* e = b + text.size();
        auto res = std::from_chars(b, e, value);
        if (res.ec != std::errc{} || res.ptr != e) throw ParseError("'" + text + "' is not a number", line);
        return value;
    }

    // Scoped name lookup: "<owner>.<name>" shadows the bare (environment)
    // name. Used both for bound resolution and dependency analysis.
    const double* lookup_scoped(const std::string& name, const std::string& owner_id,
                                const std::map<std::string, double>& bindings) {
        if (!owner_id.empty()) {
            auto it = bindings.find(owner_id + "." + name);
            if (it != bindings.end()) return &it->second;
        }
        auto it = bindings.find(name);
        if (it != bindings.end()) return &it->second;
        return nullptr;
    }


    // --- parsing ----------------------------------------------------------

    const std::string& required_value_attr(const xml::Element& elem) {
        for (const auto& [key, value] : elem.attributes) {
            if (key != "value")
                throw ParseError("unknown attribute '" + key + "' on <" + elem.name + ">", elem.line);
        }
        const std::string* v = elem.find_attribute("value");
        if (!v) throw ParseError("<" + elem.name + "> requires a value attribute", elem.line);
        return *v;
    }

    Constraint parse_constraint(const xml::Element& elem) {
        if (!elem.children.empty()) throw ParseError("<Constraint> does not take child tags", elem.line);
        std::string range_text, categories_text;
        bool have_range = false, have_categories = false;
        for (const auto& [key, value] : elem.attributes) {
            if (key == "Range") { range_text = value; have_range = !value.empty(); }
            else if (key == "Categories") { categories_text = value; have_categories = !value.empty(); }
            else if (key == "NumValues") { /* handled by the attribute parser */ }
            else throw ParseError("unknown attribute '" + key + "' on <Constraint>", elem.line);
        }
        if (have_range && have_categories)
            throw ParseError("<Constraint> populates both Range and Categories; exactly one is allowed", elem.line);
        if (!have_range && !have_categories)
            throw ParseError("<Constraint> must populate Range or Categories", elem.line);

        Constraint constraint;
        if (have_range) {
            constraint.kind = Constraint::Kind::range;
            std::string body = trim(range_text);
            if (body.size() < 2 || body.front() != '[' || body.back() != ']')
                throw ParseError("Range must look like \"[lo, hi]\", got '" + range_text + "'", elem.line);
            body = body.substr(1, body.size() - 2);
            // Split at the top-level comma (expressions may contain parens).
            int depth = 0;
            std::size_t split = std::string::npos;
            for (std::size_t i = 0; i < body.size(); ++i) {
                if (body[i] == '(') ++depth;
                else if (body[i] == ')') --depth;
                else if (body[i] == ',' && depth == 0) {
                    if (split != std::string::npos)
                        throw ParseError("Range must contain exactly one comma", elem.line);
                    split = i;
                }
            }
            if (split == std::string::npos) throw ParseError("Range must contain exactly one comma", elem.line);
            try {
                constraint.lo = Expression::parse(trim(body.substr(0, split)));
                constraint.hi = Expression::parse(trim(body.substr(split + 1)));
            } catch (const ParseError& e) {
                throw ParseError(std::string("bad Range expression: ") + e.what(), elem.line);
            }
        } else {
            constraint.kind = Constraint::Kind::categories;
            constraint.categories = split_commas(categories_text);
            std::set<std::string> seen;
            for (const std::string& label : constraint.categories) {
                if (label.empty()) throw ParseError("empty category label", elem.line);
                if (!seen.insert(label).second)
                    throw ParseError("duplicate category label '" + label + "'", elem.line);
            }
        }
        return constraint;
    }

    AttributeSpec parse_attribute(const xml::Element& elem) {
        if (!elem.attributes.empty())
            throw ParseError("<Attribute> does not take attributes", elem.line);
        const xml::Element* name_el = nullptr;
        const xml::Element* desc_el = nullptr;
        const xml::Element* type_el = nullptr;
        const xml::Element* value_el = nullptr;
        const xml::Element* mutable_el = nullptr;
        const xml::Element* constraint_el = nullptr;
        for (const xml::Element& child : elem.children) {
            const xml::Element** slot = nullptr;
            if (child.name == "Name") slot = &name_el;
            else if (child.name == "Description") slot = &desc_el;
            else if (child.name == "DataType") slot = &type_el;
            else if (child.name == "CurrentValue") slot = &value_el;
            else if (child.name == "Mutable") slot = &mutable_el;
            else if (child.name == "Constraint") slot = &constraint_el;
            else throw ParseError("unknown tag <" + child.name + "> inside <Attribute>", child.line);
            if (*slot) throw ParseError("duplicate <" + child.name + "> inside <Attribute>", child.line);
            if (child.name != "Constraint" && !child.children.empty())
                throw ParseError("<" + child.name + "> does not take child tags", child.line);
            *slot = &child;
        }
        for (auto [el, tag] : {std::pair{name_el, "Name"}, {type_el, "DataType"}, {value_el, "CurrentValue"},
                               {mutable_el, "Mutable"}, {constraint_el, "Constraint"}}) {
            if (!el) throw ParseError(std::string("<Attribute> is missing required <") + tag + ">", elem.line);
        }

        AttributeSpec attr;
        attr.name = trim(required_value_attr(*name_el));
        if (attr.name.empty()) throw ParseError("attribute name must be non-empty", name_el->line);
        if (desc_el) attr.description = required_value_attr(*desc_el);

        const std::string type_text = trim(required_value_attr(*type_el));
        if (type_text == "int") attr.data_type = DataType::integer;
        else if (type_text == "real") attr.data_type = DataType::real;
        else if (type_text == "categorical") attr.data_type = DataType::categorical;
        else throw ParseError("DataType must be int, real, or categorical; got '" + type_text + "'", type_el->line);

        const std::string mutable_text = trim(required_value_attr(*mutable_el));
        if (mutable_text == "true") attr.mutable_flag = true;
        else if (mutable_text == "false") attr.mutable_flag = false;
        else throw ParseError("Mutable must be true or false, got '" + mutable_text + "'", mutable_el->line);

        attr.constraint = parse_constraint(*constraint_el);
        if (attr.data_type == DataType::categorical && attr.constraint.kind != Constraint::Kind::categories)
            throw ParseError("categorical attribute '" + attr.name + "' requires a Categories constraint",
                             constraint_el->line);
        if (attr.data_type != DataType::categorical && attr.constraint.kind != Constraint::Kind::range)
            throw ParseError("numeric attribute '" + attr.name + "' requires a Range constraint",
                             constraint_el->line);

        attr.num_values = 1;
        if (const std::string* nv = constraint_el->find_attribute("NumValues"); nv && !nv->empty()) {
            std::int64_t n = parse_int_strict(trim(*nv), constraint_el->line);
            if (n < 1) throw ParseError("NumValues must be positive", constraint_el->line);
            attr.num_values = static_cast<int>(n);
        }

        const std::string value_text = required_value_attr(*value_el);
        std::vector<std::string> tokens = split_commas(value_text);
        if (static_cast<int>(tokens.size()) != attr.num_values)
            throw ParseError("CurrentValue of '" + attr.name + "' has " + std::to_string(tokens.size()) +
                                 " entries but NumValues is " + std::to_string(attr.num_values),
                             value_el->line);
        for (const std::string& token : tokens) {
            switch (attr.data_type) {
                case DataType::integer: attr.current_value.emplace_back(parse_int_strict(token, value_el->line)); break;
                case DataType::real: attr.current_value.emplace_back(parse_real_strict(token, value_el->line)); break;
                case DataType::categorical:
                    if (token.empty()) throw ParseError("empty categorical value", value_el->line);
                    attr.current_value.emplace_back(token);
                    break;
            }
        }
        return attr;
    }

    EntityTemplate parse_entity(const xml::Element& elem, bool allow_count) {
        EntityTemplate entity;
        for (const auto& [key, value] : elem.attributes) {
            if (key == "id") entity.id = value;
            else if (key == "type") entity.type = value;
            else if (key == "count" && allow_count) {
                try {
                    entity.count = Expression::parse(value);
                } catch (const ParseError& e) {
                    throw ParseError(std::string("bad count expression: ") + e.what(), elem.line);
                }
            } else {
                throw ParseError("unknown attribute '" + key + "' on <" + elem.name + ">", elem.line);
            }
        }
        if (entity.id.empty()) throw ParseError("<" + elem.name + "> requires a non-empty id", elem.line);
        for (const xml::Element& child : elem.children) {
            if (child.name != "Attribute")
                throw ParseError("unknown tag <" + child.name + "> inside <" + elem.name + ">", child.line);
            entity.attributes.push_back(parse_attribute(child));
        }
        std::set<std::string> names;
        for (const AttributeSpec& attr : entity.attributes)
            if (!names.insert(attr.name).second)
                throw ParseError("duplicate attribute '" + attr.name + "' in <" + elem.name + " id=\"" + entity.id +
                                     "\">",
                                 elem.line);
        return entity;
    }

    // --- template-level validation -----------------------------------------

    struct ScopedAttr {
        const AttributeSpec* attr;
        std::string owner_id;   // "" for environment attributes
        std::string qualified;  // owner-qualified name
    };

    std::vector<ScopedAttr> all_attributes(const EnvironmentTemplate& tmpl) {
        std::vector<ScopedAttr> out;
        for (const AttributeSpec& attr : tmpl.env_attributes) out.push_back({&attr, "", attr.name});
        for (const EntityTemplate& entity : tmpl.objects)
            for (const AttributeSpec& attr : entity.attributes)
                out.push_back({&attr, entity.id, entity.id + "." + attr.name});
        for (const EntityTemplate& entity : tmpl.agents)
            for (const AttributeSpec& attr : entity.attributes)
                out.push_back({&attr, entity.id, entity.id + "." + attr.name});
        return out;
    }

    // Resolves reference `ref` made from `owner_id` scope to a declared
    // qualified name, or throws.
    std::string resolve_reference(const std::string& ref, const std::string& owner_id,
                                  const std::set<std::string>& declared) {
        if (!owner_id.empty() && declared.count(owner_id + "." + ref)) return owner_id + "." + ref;
        if (declared.count(ref)) return ref;
        throw ParseError("formula reference '" + ref + "' does not resolve to a declared attribute");
    }

    void check_reference_graph(const EnvironmentTemplate& tmpl) {
        auto attrs = all_attributes(tmpl);
        std::set<std::string> declared;
        for (const ScopedAttr& sa : attrs) declared.insert(sa.qualified);

        std::map<std::string, std::vector<std::string>> edges;
        for (const ScopedAttr& sa : attrs) {
            if (sa.attr->constraint.kind != Constraint::Kind::range) continue;
            for (const Expression* expr : {&sa.attr->constraint.lo, &sa.attr->constraint.hi})
                for (const std::string& ref : expr->references())
                    edges[sa.qualified].push_back(resolve_reference(ref, sa.owner_id, declared));
        }
        for (const EntityTemplate& entity : tmpl.objects) {
            if (!entity.count) continue;
            for (const std::string& ref : entity.count->references())
                if (!declared.count(ref))
                    throw ParseError("count expression of object '" + entity.id + "' references undeclared '" + ref +
                                     "'");
        }

        // Depth-first cycle detection. 0 = unseen, 1 = on stack, 2 = done.
        std::map<std::string, int> color;
        std::vector<std::pair<std::string, std::size_t>> stack;
        for (const ScopedAttr& sa : attrs) {
            if (color[sa.qualified] != 0) continue;
            stack.push_back({sa.qualified, 0});
            color[sa.qualified] = 1;
            while (!stack.empty()) {
                auto& [node, next] = stack.back();
                const auto& out = edges[node];
                if (next < out.size()) {
                    const std::string& target = out[next++];
                    if (color[target] == 1)
                        throw ParseError("cyclic formula reference through attribute '" + target + "'");
                    if (color[target] == 0) {
                        color[target] = 1;
                        stack.push_back({target, 0});
                    }
                } else {
                    color[node] = 2;
                    stack.pop_back();
                }
            }
        }
    }

    void check_value(const AttributeSpec& attr, const std::vector<Scalar>& values, const std::string& owner_id,
                     const std::map<std::string, double>& bindings) {
        if (static_cast<int>(values.size()) != attr.num_values)
            throw ConstraintError("attribute '" + attr.name + "' expects " + std::to_string(attr.num_values) +
                                  " value(s), got " + std::to_string(values.size()));
        if (attr.constraint.kind == Constraint::Kind::categories) {
            for (const Scalar& v : values) {
                if (!is_category(v))
                    throw ConstraintError("attribute '" + attr.name + "' expects a categorical value");
                const auto& cats = attr.constraint.categories;
                if (std::find(cats.begin(), cats.end(), std::get<std::string>(v)) == cats.end())
                    throw ConstraintError("value '" + std::get<std::string>(v) + "' of attribute '" + attr.name +
                                          "' is not one of its categories");
            }
            return;
        }
        auto [lo, hi] = resolve_range(attr, owner_id, bindings);
        for (const Scalar& v : values) {
            if (attr.data_type == DataType::integer && !is_int(v))
                throw ConstraintError("attribute '" + attr.name + "' expects an integer value");
            if (attr.data_type == DataType::real && is_category(v))
                throw ConstraintError("attribute '" + attr.name + "' expects a numeric value");
            double x = scalar_number(v);
            if (x < lo || x > hi)
                throw ConstraintError("value " + format_scalar(v) + " of attribute '" + attr.name +
                                      "' violates constraint [" + format_double(lo) + ", " + format_double(hi) + "]");
        }
    }

    // Numeric bindings from template defaults (scalar numeric attributes).
    std::map<std::string, double> default_bindings(const EnvironmentTemplate& tmpl) {
        std::map<std::string, double> out;
        for (const ScopedAttr& sa : all_attributes(tmpl))
            if (sa.attr->num_values == 1 && sa.attr->data_type != DataType::categorical)
                out[sa.qualified] = scalar_number(sa.attr->current_value.front());
        return out;
    }

    void validate_defaults(const EnvironmentTemplate& tmpl) {
        auto bindings = default_bindings(tmpl);
        for (const ScopedAttr& sa : all_attributes(tmpl)) check_value(*sa.attr, sa.attr->current_value, sa.owner_id, bindings);
    }

    std::int64_t eval_count(const EntityTemplate& entity, const std::map<std::string, double>& bindings) {
        if (!entity.count) return 1;
        double c = eval_scoped_expression(*entity.count, "", bindings);
        double rounded = std::nearbyint(c);
        if (std::abs(c - rounded) > 1e-9 || rounded < 0)
            throw ConstraintError("count expression of object '" + entity.id + "' resolved to " + format_double(c) +
                                  "; expected a non-negative integer");
        return static_cast<std::int64_t>(rounded);
    }

    std::vector<EntityTemplate> expand_objects(const EnvironmentTemplate& tmpl,
                                               const std::map<std::string, double>& bindings) {
        std::vector<EntityTemplate> out;
        std::set<std::string> ids;
        for (const EntityTemplate& entity : tmpl.objects) {
            std::int64_t count = eval_count(entity, bindings);
            if (!entity.count) {
                out.push_back(entity);
                if (!ids.insert(entity.id).second) throw ConstraintError("duplicate object id '" + entity.id + "'");
                continue;
            }
            for (std::int64_t k = 1; k <= count; ++k) {
                EntityTemplate instance = entity;
                instance.count.reset();
                instance.id = entity.id + "_" + std::to_string(k);
                if (!ids.insert(instance.id).second)
                    throw ConstraintError("expanded object id '" + instance.id + "' collides with another object");
                out.push_back(std::move(instance));
            }
        }
        return out;
    }

    // --- serialization ------------------------------------------------------

    xml::Element attribute_to_xml(const AttributeSpec& attr) {
        xml::Element elem;
        elem.name = "Attribute";
        auto child = [&](std::string name, std::string value) {
            xml::Element c;
            c.name = std::move(name);
            c.attributes.emplace_back("value", std::move(value));
            elem.children.push_back(std::move(c));
        };
        child("Name", attr.name);
        if (!attr.description.empty()) child("Description", attr.description);
        child("DataType", std::string(data_type_name(attr.data_type)));
        std::string values;
        for (std::size_t i = 0; i < attr.current_value.size(); ++i) {
            if (i) values += ",";
            values += format_scalar(attr.current_value[i]);
        }
        child("CurrentValue", values);
        child("Mutable", attr.mutable_flag ? "true" : "false");

        xml::Element constraint;
        constraint.name = "Constraint";
        if (attr.constraint.kind == Constraint::Kind::range) {
            constraint.attributes.emplace_back("Range",
                                               "[" + attr.constraint.lo.text() + ", " + attr.constraint.hi.text() + "]");
        } else {
            std::string cats;
            for (std::size_t i = 0; i < attr.constraint.categories.size(); ++i) {
                if (i) cats += ",";
                cats += attr.constraint.categories[i];
            }
            constraint.attributes.emplace_back("Categories", cats);
        }
        if (attr.num_values != 1) constraint.attributes.emplace_back("NumValues", std::to_string(attr.num_values));
        elem.children.push_back(std::move(constraint));
        return elem;
    }

    xml::Element entity_to_xml(const EntityTemplate& entity, const char* tag) {
        xml::Element elem;
        elem.name = tag;
        elem.attributes.emplace_back("id", entity.id);
        elem.attributes.emplace_back("type", entity.type);
        if (entity.count) elem.attributes.emplace_back("count", entity.count->text());
        for (const AttributeSpec& attr : entity.attributes) elem.children.push_back(attribute_to_xml(attr));
        return elem;
    }

} // namespace

std::string_view data_type_name(DataType t) {
    switch (t) {
        case DataType::integer: return "int";
        case DataType::real: return "real";
        case DataType::categorical: return "categorical";
    }
    return "?";
}

bool Constraint::operator==(const Constraint& other) const {
    if (kind != other.kind) return false;
    if (kind == Kind::range) return lo.text() == other.lo.text() && hi.text() == other.hi.text();
    return categories == other.categories;
}

bool AttributeSpec::operator==(const AttributeSpec& other) const {
    return name == other.name && description == other.description && data_type == other.data_type &&
           current_value == other.current_value && mutable_flag == other.mutable_flag &&
           constraint == other.constraint && num_values == other.num_values;
}

bool EntityTemplate::operator==(const EntityTemplate& other) const {
    bool count_eq = count.has_value() == other.count.has_value() &&
                    (!count || count->text() == other.count->text());
    return id == other.id && type == other.type && attributes == other.attributes && count_eq;
}

bool EnvironmentTemplate::operator==(const EnvironmentTemplate& other) const {
    return env_id == other.env_id && env_type == other.env_type && env_attributes == other.env_attributes &&
           objects == other.objects && agents == other.agents;
}

const AttributeSpec* EnvironmentTemplate::find_env_attribute(std::string_view name) const {
    for (const AttributeSpec& attr : env_attributes)
        if (attr.name == name) return &attr;
    return nullptr;
}

Assignment EnvironmentConfig::env_assignment() const {
    Assignment out;
    for (const AttributeSpec& attr : resolved.env_attributes) out[attr.name] = attr.current_value;
    return out;
}

Assignment EnvironmentConfig::task_defaults() const {
    Assignment out;
    for (const EntityTemplate* entity : [&] {
             std::vector<const EntityTemplate*> es;
             for (const auto& e : resolved.objects) es.push_back(&e);
             for (const auto& e : resolved.agents) es.push_back(&e);
             return es;
         }()) {
        for (const AttributeSpec& attr : entity->attributes) out[entity->id + "." + attr.name] = attr.current_value;
    }
    return out;
}

double eval_scoped_expression(const Expression& expr, const std::string& owner_id,
                              const std::map<std::string, double>& bindings) {
    std::map<std::string, double> local;
    for (const std::string& ref : expr.references()) {
        const double* v = lookup_scoped(ref, owner_id, bindings);
        if (!v) throw ConstraintError("unresolved reference '" + ref + "' in expression '" + expr.text() + "'");
        local[ref] = *v;
    }
    return expr.evaluate(local);
}

EnvironmentTemplate parse_template(std::string_view xml_text) {
    return template_from_xml(xml::parse(xml_text));
}

EnvironmentTemplate template_from_xml(const xml::Element& root) {
    if (root.name != "Environment")
        throw ParseError("expected <Environment> as the root tag, got <" + root.name + ">", root.line);

    EnvironmentTemplate tmpl;
    for (const auto& [key, value] : root.attributes) {
        if (key == "id") tmpl.env_id = value;
        else if (key == "type") tmpl.env_type = value;
        else throw ParseError("unknown attribute '" + key + "' on <Environment>", root.line);
    }

    bool seen_objects = false, seen_agents = false;
    for (const xml::Element& child : root.children) {
        if (child.name == "Attribute") {
            tmpl.env_attributes.push_back(parse_attribute(child));
        } else if (child.name == "Objects") {
            if (seen_objects) throw ParseError("duplicate <Objects> block", child.line);
            seen_objects = true;
            if (!child.attributes.empty()) throw ParseError("<Objects> does not take attributes", child.line);
            for (const xml::Element& object : child.children) {
                if (object.name != "Object")
                    throw ParseError("unknown tag <" + object.name + "> inside <Objects>", object.line);
                tmpl.objects.push_back(parse_entity(object, /*allow_count=*/true));
            }
        } else if (child.name == "Agents") {
            if (seen_agents) throw ParseError("duplicate <Agents> block", child.line);
            seen_agents = true;
            if (!child.attributes.empty()) throw ParseError("<Agents> does not take attributes", child.line);
            for (const xml::Element& agent : child.children) {
                if (agent.name != "Agent")
                    throw ParseError("unknown tag <" + agent.name + "> inside <Agents>", agent.line);
                tmpl.agents.push_back(parse_entity(agent, /*allow_count=*/false));
            }
        } else {
            throw ParseError("unknown tag <" + child.name + "> inside <Environment>", child.line);
        }
    }

    std::set<std::string> env_names;
    for (const AttributeSpec& attr : tmpl.env_attributes)
        if (!env_names.insert(attr.name).second)
            throw ParseError("duplicate environment attribute '" + attr.name + "'", root.line);
    std::set<std::string> entity_ids;
    for (const EntityTemplate& entity : tmpl.objects)
        if (!entity_ids.insert(entity.id).second) throw ParseError("duplicate entity id '" + entity.id + "'", root.line);
    for (const EntityTemplate& entity : tmpl.agents)
        if (!entity_ids.insert(entity.id).second) throw ParseError("duplicate entity id '" + entity.id + "'", root.line);

    check_reference_graph(tmpl);
    try {
        validate_defaults(tmpl);
    } catch (const ConstraintError& e) {
        throw ParseError(std::string("template defaults are inconsistent: ") + e.what());
    }
    return tmpl;
}

std::string serialize_template(const EnvironmentTemplate& tmpl) { return xml::serialize(template_to_xml(tmpl)); }

xml::Element template_to_xml(const EnvironmentTemplate& tmpl) {
    xml::Element root;
    root.name = "Environment";
    root.attributes.emplace_back("id", tmpl.env_id);
    root.attributes.emplace_back("type", tmpl.env_type);
    for (const AttributeSpec& attr : tmpl.env_attributes) root.children.push_back(attribute_to_xml(attr));
    if (!tmpl.objects.empty()) {
        xml::Element objects;
        objects.name = "Objects";
        for (const EntityTemplate& entity : tmpl.objects) objects.children.push_back(entity_to_xml(entity, "Object"));
        root.children.push_back(std::move(objects));
    }
    if (!tmpl.agents.empty()) {
        xml::Element agents;
        agents.name = "Agents";
        for (const EntityTemplate& entity : tmpl.agents) agents.children.push_back(entity_to_xml(entity, "Agent"));
        root.children.push_back(std::move(agents));
    }
    return root;
}

double eval_expression(const Expression& expr, const std::map<std::string, double>& bindings) {
    return expr.evaluate([&] {
        std::map<std::string, double> local;
        for (const std::string& ref : expr.references()) {
            auto it = bindings.find(ref);
            if (it == bindings.end()) throw ConstraintError("unbound name '" + ref + "' in expression");
            local[ref] = it->second;
        }
        return local;
    }());
}

std::map<std::string, double> numeric_bindings(const Assignment& assignment) {
    std::map<std::string, double> out;
    for (const auto& [name, values] : assignment)
        if (values.size() == 1 && !is_category(values.front())) out[name] = scalar_number(values.front());
    return out;
}

std::pair<double, double> resolve_range(const AttributeSpec& attr, const std::string& owner_id,
                                        const std::map<std::string, double>& bindings) {
    if (attr.constraint.kind != Constraint::Kind::range)
        throw ConstraintError("attribute '" + attr.name + "' has no numeric range");
    double lo = eval_scoped_expression(attr.constraint.lo, owner_id, bindings);
    double hi = eval_scoped_expression(attr.constraint.hi, owner_id, bindings);
    if (lo > hi)
        throw ConstraintError("constraint of attribute '" + attr.name + "' resolved to lo " + format_double(lo) +
                              " > hi " + format_double(hi));
    return {lo, hi};
}

std::vector<DimensionSpec> extract_dimensions(const EnvironmentTemplate& tmpl, DimensionLevel level,
                                              const Assignment& bindings) {
    // Effective bindings: template defaults overridden by the caller's values.
    std::map<std::string, double> numeric = default_bindings(tmpl);
    for (const auto& [name, value] : numeric_bindings(bindings)) numeric[name] = value;

    std::vector<DimensionSpec> dims;
    auto add_dimension = [&](const AttributeSpec& attr, const OwnerRef& owner, const std::string& qualified) {
        DimensionSpec dim;
        dim.owner = owner;
        dim.attribute_name = qualified;
        dim.data_type = attr.data_type;
        dim.values_per_sample = attr.num_values;
        dim.level = level;
        if (attr.constraint.kind == Constraint::Kind::categories) {
            dim.categorical = true;
            dim.categories = attr.constraint.categories;
        } else {
            auto [lo, hi] = resolve_range(attr, owner.id, numeric);
            dim.lo = lo;
            dim.hi = hi;
            dim.lo_expr = attr.constraint.lo;
            dim.hi_expr = attr.constraint.hi;
        }
        dims.push_back(std::move(dim));
    };

    if (level == DimensionLevel::env) {
        for (const AttributeSpec& attr : tmpl.env_attributes)
            if (attr.mutable_flag) add_dimension(attr, OwnerRef{OwnerRef::Kind::environment, ""}, attr.name);
        return dims;
    }

    std::vector<EntityTemplate> expanded = expand_objects(tmpl, numeric);
    // Expanded instance defaults join the binding scope for sibling lookups.
    for (const EntityTemplate& entity : expanded)
        for (const AttributeSpec& attr : entity.attributes)
            if (attr.num_values == 1 && attr.data_type != DataType::categorical)
                numeric.emplace(entity.id + "." + attr.name, scalar_number(attr.current_value.front()));

    for (const EntityTemplate& entity : expanded)
        for (const AttributeSpec& attr : entity.attributes)
            if (attr.mutable_flag)
                add_dimension(attr, OwnerRef{OwnerRef::Kind::object, entity.id}, entity.id + "." + attr.name);
    for (const EntityTemplate& entity : tmpl.agents)
        for (const AttributeSpec& attr : entity.attributes)
            if (attr.mutable_flag)
                add_dimension(attr, OwnerRef{OwnerRef::Kind::agent, entity.id}, entity.id + "." + attr.name);
    return dims;
}

EnvironmentConfig instantiate(const EnvironmentTemplate& tmpl, const Assignment& assignment) {
    // Every mutable environment attribute needs a value; immutable entries
    // are tolerated only when they restate the current value.
    for (const auto& [name, values] : assignment) {
        const AttributeSpec* attr = tmpl.find_env_attribute(name);
        if (!attr) throw ConstraintError("assignment names unknown environment attribute '" + name + "'");
        if (!attr->mutable_flag && values != attr->current_value)
            throw ConstraintError("assignment changes immutable attribute '" + name + "'");
    }

    EnvironmentConfig config;
    config.resolved.env_id = tmpl.env_id;
    config.resolved.env_type = tmpl.env_type;
    config.resolved.agents = tmpl.agents;

    Assignment merged;
    for (const AttributeSpec& attr : tmpl.env_attributes) {
        auto it = assignment.find(attr.name);
        if (attr.mutable_flag && it == assignment.end())
            throw ConstraintError("assignment is missing mutable attribute '" + attr.name + "'");
        merged[attr.name] = (it != assignment.end()) ? it->second : attr.current_value;
    }
    auto bindings = numeric_bindings(merged);

    for (const AttributeSpec& attr : tmpl.env_attributes) {
        AttributeSpec resolved = attr;
        resolved.current_value = merged[attr.name];
        check_value(attr, resolved.current_value, "", bindings);
        config.resolved.env_attributes.push_back(std::move(resolved));
    }
    config.resolved.objects = expand_objects(tmpl, bindings);

    // Instance defaults must satisfy the bounds implied by this assignment.
    for (const EntityTemplate& entity : config.resolved.objects)
        for (const AttributeSpec& attr : entity.attributes) check_value(attr, attr.current_value, entity.id, bindings);
    for (const EntityTemplate& entity : config.resolved.agents)
        for (const AttributeSpec& attr : entity.attributes) check_value(attr, attr.current_value, entity.id, bindings);
    return config;
}

EnvironmentConfig apply_task_assignment(const EnvironmentConfig& config, const Assignment& task_assignment) {
    EnvironmentConfig out = config;
    std::set<std::string> known;
    auto bindings = numeric_bindings(config.env_assignment());
    for (const auto& [name, value] : numeric_bindings(task_assignment)) bindings[name] = value;

    auto apply_to = [&](std::vector<EntityTemplate>& entities) {
        for (EntityTemplate& entity : entities) {
            for (AttributeSpec& attr : entity.attributes) {
                const std::string qualified = entity.id + "." + attr.name;
                known.insert(qualified);
                auto it = task_assignment.find(qualified);
                if (it == task_assignment.end()) continue;
                if (!attr.mutable_flag && it->second != attr.current_value)
                    throw ConstraintError("task assignment changes immutable attribute '" + qualified + "'");
                check_value(attr, it->second, entity.id, bindings);
                attr.current_value = it->second;
            }
        }
    };
    apply_to(out.resolved.objects);
    apply_to(out.resolved.agents);
    for (const auto& [name, values] : task_assignment)
        if (!known.count(name))
            throw ConstraintError("task assignment names unknown attribute '" + name + "'");
    return out;
}

} // namespace aiprobe
