#pragma once

#include "aiprobe/expression.hpp"
#include "aiprobe/xml.hpp"
#include "aiprobe/scalar.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aiprobe {

enum class DataType { integer, real, categorical };

std::string_view data_type_name(DataType t);

// Allowed values for one attribute: either a numeric range whose bounds are
// constants or formulas over other attributes, or an ordered category list.
struct Constraint {
    enum class Kind { range, categories };

    Kind kind = Kind::range;
    Expression lo, hi;                    // kind == range
    std::vector<std::string> categories;  // kind == categories

    bool operator==(const Constraint& other) const;
};

struct AttributeSpec {
    std::string name;
    std::string description;
    DataType data_type = DataType::integer;
    std::vector<Scalar> current_value; // num_values entries
    bool mutable_flag = false;
    Constraint constraint;
    int num_values = 1;

    bool operator==(const AttributeSpec& other) const;
};

// An <Object> or <Agent> block. Objects may carry a count expression that
// instantiate() evaluates to replicate the block (ids become "<id>_<k>").
struct EntityTemplate {
    std::string id;
    std::string type;
    std::vector<AttributeSpec> attributes;
    std::optional<Expression> count; // objects only

    bool operator==(const EntityTemplate& other) const;
};

struct EnvironmentTemplate {
    std::string env_id;
    std::string env_type;
    std::vector<AttributeSpec> env_attributes;
    std::vector<EntityTemplate> objects;
    std::vector<EntityTemplate> agents;

    const AttributeSpec* find_env_attribute(std::string_view name) const;

    bool operator==(const EnvironmentTemplate& other) const;
};

// A template whose environment attributes hold concrete sampled values and
// whose counted objects are expanded into individual instances.
struct EnvironmentConfig {
    std::string config_id;
    EnvironmentTemplate resolved;

    // Environment-level attribute values (mutable and immutable).
    Assignment env_assignment() const;
    // Qualified task-level attribute defaults ("<owner>.<attr>").
    Assignment task_defaults() const;

    bool operator==(const EnvironmentConfig& other) const = default;
};

struct OwnerRef {
    enum class Kind { environment, object, agent };
    Kind kind = Kind::environment;
    std::string id; // empty for environment

    bool operator==(const OwnerRef&) const = default;
};

enum class DimensionLevel { env, task };

// One mutable attribute viewed as a sampling dimension. List-valued
// attributes stay one DimensionSpec with values_per_sample > 1; the sampler
// flattens them into scalar columns named "name[i]".
struct DimensionSpec {
    OwnerRef owner;
    std::string attribute_name; // qualified: "grid_size", "lava_1.x", "agent.d"
    DataType data_type = DataType::integer;
    bool categorical = false;
    double lo = 0.0, hi = 0.0;           // resolved numeric bounds
    std::vector<std::string> categories; // categorical dimensions
    int values_per_sample = 1;           // EC_i
    DimensionLevel level = DimensionLevel::env;
    // Unresolved bound formulas, for per-row re-resolution during sampling.
    Expression lo_expr, hi_expr;
};

// --- template operations -------------------------------------------------

// Parses the Figure 2/3 XML dialect. Rejects unknown tags/attributes,
// missing required children, malformed constraints, and cyclic formula
// references. Throws ParseError.
EnvironmentTemplate parse_template(std::string_view xml_text);

std::string serialize_template(const EnvironmentTemplate& tmpl);
xml::Element template_to_xml(const EnvironmentTemplate& tmpl);
inline std::string serialize_config(const EnvironmentConfig& config) { return serialize_template(config.resolved); }

// Mutable attributes at the requested level, in document order, with bounds
// resolved to numbers. `bindings` overrides the template's current values
// during resolution; task-level extraction expands counted objects first.
std::vector<DimensionSpec> extract_dimensions(const EnvironmentTemplate& tmpl, DimensionLevel level,
                                              const Assignment& bindings = {});

// Evaluates a bound expression against numeric bindings.
double eval_expression(const Expression& expr, const std::map<std::string, double>& bindings);

// Same, but references first try "<owner_id>.<name>" before the bare name,
// so object/agent attributes can use sibling references.
double eval_scoped_expression(const Expression& expr, const std::string& owner_id,
                              const std::map<std::string, double>& bindings);

// Parses an already-parsed <Environment> element (shared by parse_template
// and the task-file reader).
EnvironmentTemplate template_from_xml(const xml::Element& element);

// Builds a concrete configuration from a full mutable-attribute assignment
// (environment level). Immutable attributes keep their current values;
// counted objects are expanded. Throws ConstraintError on violations.
EnvironmentConfig instantiate(const EnvironmentTemplate& tmpl, const Assignment& assignment);

// Returns a copy of `config` whose object/agent attribute values are taken
// from the qualified task-level assignment (validated against constraints).
EnvironmentConfig apply_task_assignment(const EnvironmentConfig& config, const Assignment& task_assignment);

// Numeric bindings derived from an assignment. Only scalar numeric entries
// participate; formulas cannot reference categorical or list attributes.
std::map<std::string, double> numeric_bindings(const Assignment& assignment);

// Resolved numeric bounds of `attr` under `bindings`, with the sibling/env
// name-resolution scope of `owner_id` applied. Throws on lo > hi.
std::pair<double, double> resolve_range(const AttributeSpec& attr, const std::string& owner_id,
                                        const std::map<std::string, double>& bindings);

} // namespace aiprobe
