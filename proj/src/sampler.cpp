#include "aiprobe/sampler.hpp"

#include "aiprobe/errors.hpp"
#include "aiprobe/xml.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace aiprobe {

namespace {

    constexpr int kRetryLimit = 16;

    // Unit samples in stratum order: entry k*per_stratum + j is draw j from
    // stratum k, i.e. (k + u)/b.
    std::vector<double> stratified_units(int b, int per_stratum, Rng& rng) {
        std::vector<double> raw(static_cast<std::size_t>(b) * per_stratum);
        for (int k = 0; k < b; ++k)
            for (int j = 0; j < per_stratum; ++j)
                raw[static_cast<std::size_t>(k) * per_stratum + j] = (k + rng.uniform01()) / b;
        return raw;
    }

    struct FlatColumn {
        std::size_t dim_index;
        int sub_index;
        std::string name;
    };

    std::vector<FlatColumn> flatten(const std::vector<DimensionSpec>& dims) {
        std::vector<FlatColumn> cols;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            for (int k = 0; k < dims[i].values_per_sample; ++k) {
                std::string name = dims[i].attribute_name;
                if (dims[i].values_per_sample > 1) name += "[" + std::to_string(k) + "]";
                cols.push_back({i, k, std::move(name)});
            }
        }
        return cols;
    }

    // Stable topological order of dimensions by bound-formula references, so
    // parents are mapped before the bounds of their dependents are resolved.
    std::vector<std::size_t> dependency_order(const std::vector<DimensionSpec>& dims) {
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < dims.size(); ++i) index[dims[i].attribute_name] = i;

        std::vector<std::vector<std::size_t>> deps(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (dims[i].categorical) continue;
            for (const Expression* expr : {&dims[i].lo_expr, &dims[i].hi_expr}) {
                for (const std::string& ref : expr->references()) {
                    std::optional<std::size_t> target;
                    if (!dims[i].owner.id.empty()) {
                        auto it = index.find(dims[i].owner.id + "." + ref);
                        if (it != index.end()) target = it->second;
                    }
                    if (!target) {
                        auto it = index.find(ref);
                        if (it != index.end()) target = it->second;
                    }
                    if (target && *target != i) deps[i].push_back(*target);
                }
            }
        }

        std::vector<bool> placed(dims.size(), false);
        std::vector<std::size_t> order;
        while (order.size() < dims.size()) {
            bool progressed = false;
            for (std::size_t i = 0; i < dims.size(); ++i) {
                if (placed[i]) continue;
                bool ready = std::all_of(deps[i].begin(), deps[i].end(), [&](std::size_t d) { return placed[d]; });
                if (ready) {
                    placed[i] = true;
                    order.push_back(i);
                    progressed = true;
                }
            }
            if (!progressed) throw ConstraintError("cyclic dependency among sampling dimensions");
        }
        return order;
    }

    // One role's drawn units for every flattened column.
    struct DrawnColumns {
        std::vector<SampleColumn> columns; // aligned with the flattened list
    };

    Scalar map_unit(const DimensionSpec& dim, double unit, int stratum, int b,
                    const std::map<std::string, double>& bindings, Rng& retry_rng) {
        if (dim.categorical) {
            int idx = category_index_from_unit(unit, static_cast<int>(dim.categories.size()));
            return dim.categories[static_cast<std::size_t>(idx - 1)];
        }
        double lo = eval_scoped_expression(dim.lo_expr, dim.owner.id, bindings);
        double hi = eval_scoped_expression(dim.hi_expr, dim.owner.id, bindings);
        if (lo > hi)
            throw ConstraintError("bounds of dimension '" + dim.attribute_name + "' resolved to lo " +
                                  format_double(lo) + " > hi " + format_double(hi));
        double u = unit;
        for (int attempt = 0;; ++attempt) {
            double v = lo + u * (hi - lo);
            if (dim.data_type == DataType::integer) {
                double r = std::clamp(static_cast<double>(std::llround(v)), lo, hi);
                // Clamp can leave a fractional bound; snap inward to the
                // nearest representable integer inside the range.
                double ri = std::clamp(r, std::ceil(lo), std::floor(hi));
                if (ri >= lo && ri <= hi && std::ceil(lo) <= std::floor(hi)) {
                    return static_cast<std::int64_t>(ri);
                }
            } else if (v >= lo && v <= hi) {
                return v;
            }
            if (attempt >= kRetryLimit)
                throw ConstraintError("could not draw a valid value for dimension '" + dim.attribute_name + "'");
            u = (stratum - 1 + retry_rng.uniform01()) / b;
        }
    }

    // Maps drawn units onto concrete values, one assignment per row.
    std::vector<Assignment> map_rows(const std::vector<DimensionSpec>& dims, const std::vector<FlatColumn>& flat,
                                     const DrawnColumns& drawn, int b,
                                     const std::map<std::string, double>& base_bindings, const Rng& retry_root) {
        std::vector<std::size_t> order = dependency_order(dims);
        std::vector<std::vector<std::size_t>> dim_columns(dims.size());
        for (std::size_t c = 0; c < flat.size(); ++c) dim_columns[flat[c].dim_index].push_back(c);

        std::vector<Assignment> rows(static_cast<std::size_t>(b));
        for (int r = 0; r < b; ++r) {
            std::map<std::string, double> bindings = base_bindings;
            Assignment& assignment = rows[static_cast<std::size_t>(r)];
            for (std::size_t di : order) {
                const DimensionSpec& dim = dims[di];
                std::vector<Scalar> values(static_cast<std::size_t>(dim.values_per_sample));
                for (std::size_t c : dim_columns[di]) {
                    Rng retry_rng = retry_root.split(flat[c].name, static_cast<std::uint64_t>(r));
                    const SampleColumn& col = drawn.columns[c];
                    values[static_cast<std::size_t>(flat[c].sub_index)] =
                        map_unit(dim, col.unit[static_cast<std::size_t>(r)], col.stratum[static_cast<std::size_t>(r)],
                                 b, bindings, retry_rng);
                }
                if (dim.values_per_sample == 1 && !is_category(values.front()))
                    bindings[dim.attribute_name] = scalar_number(values.front());
                assignment[dim.attribute_name] = std::move(values);
            }
        }
        return rows;
    }

    std::string padded_index(std::size_t i, std::size_t total) {
        std::size_t width = std::max<std::size_t>(4, std::to_string(total).size());
        std::string digits = std::to_string(i);
        return std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
    }

    Assignment defaults_for_mutable_env(const EnvironmentTemplate& tmpl) {
        Assignment out;
        for (const AttributeSpec& attr : tmpl.env_attributes)
            if (attr.mutable_flag) out[attr.name] = attr.current_value;
        return out;
    }

} // namespace

const SampleColumn* SampleMatrix::find(const std::string& column_name) const {
    for (const SampleColumn& col : columns)
        if (col.name == column_name) return &col;
    return nullptr;
}

std::vector<double> lhs_continuous(double lo, double hi, int b, int per_stratum, Rng& rng) {
    if (lo > hi) throw ConstraintError("lhs_continuous: lo > hi");
    if (b < 1 || per_stratum < 1) throw ConstraintError("lhs_continuous: b and per_stratum must be positive");
    std::vector<double> raw = stratified_units(b, per_stratum, rng);
    std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(b));
    std::vector<double> out(raw.size());
    for (int r = 0; r < b; ++r)
        for (int j = 0; j < per_stratum; ++j)
            out[static_cast<std::size_t>(r) * per_stratum + j] =
                lo + raw[perm[static_cast<std::size_t>(r)] * per_stratum + j] * (hi - lo);
    return out;
}

std::vector<std::string> lhs_categorical(const std::vector<std::string>& categories, int b, int per_stratum,
                                         Rng& rng) {
    if (categories.empty()) throw ConstraintError("lhs_categorical: empty category list");
    std::vector<double> units = lhs_continuous(0.0, 1.0, b, per_stratum, rng);
    std::vector<std::string> out;
    out.reserve(units.size());
    for (double u : units)
        out.push_back(categories[static_cast<std::size_t>(category_index_from_unit(u, static_cast<int>(categories.size())) - 1)]);
    return out;
}

int category_index_from_unit(double unit, int k) {
    if (k < 1) throw ConstraintError("category_index_from_unit: k must be positive");
    int idx = static_cast<int>(std::ceil(unit * k));
    return std::clamp(idx, 1, k);
}

GeneratedConfigs generate_env_configs(const EnvironmentTemplate& tmpl, int b, const Rng& rng,
                                      const std::string& config_id_prefix) {
    if (b < 1) throw ConstraintError("generate_env_configs: b must be positive");
    GeneratedConfigs out;
    out.matrix.bins = b;

    std::vector<DimensionSpec> dims = extract_dimensions(tmpl, DimensionLevel::env);
    std::vector<Assignment> rows;
    if (dims.empty()) {
        rows.assign(static_cast<std::size_t>(b), defaults_for_mutable_env(tmpl));
    } else {
        std::vector<FlatColumn> flat = flatten(dims);
        DrawnColumns drawn;
        for (const FlatColumn& col : flat) {
            Rng col_rng = rng.split("env-col").split(col.name);
            std::vector<double> raw = stratified_units(b, 1, col_rng);
            std::vector<std::size_t> perm = col_rng.permutation(static_cast<std::size_t>(b));
            SampleColumn sample;
            sample.name = col.name;
            sample.dimension_name = dims[col.dim_index].attribute_name;
            sample.stratum.resize(static_cast<std::size_t>(b));
            sample.unit.resize(static_cast<std::size_t>(b));
            for (int r = 0; r < b; ++r) {
                sample.stratum[static_cast<std::size_t>(r)] = static_cast<int>(perm[static_cast<std::size_t>(r)]) + 1;
                sample.unit[static_cast<std::size_t>(r)] = raw[perm[static_cast<std::size_t>(r)]];
            }
            drawn.columns.push_back(std::move(sample));
        }

        // Immutable attributes join the binding scope at their defaults.
        std::map<std::string, double> base;
        for (const AttributeSpec& attr : tmpl.env_attributes)
            if (attr.num_values == 1 && attr.data_type != DataType::categorical && !attr.mutable_flag)
                base[attr.name] = scalar_number(attr.current_value.front());

        rows = map_rows(dims, flat, drawn, b, base, rng.split("env-retry"));
        out.matrix.columns = std::move(drawn.columns);
    }

    for (int r = 0; r < b; ++r) {
        EnvironmentConfig config = instantiate(tmpl, rows[static_cast<std::size_t>(r)]);
        config.config_id = config_id_prefix + padded_index(static_cast<std::size_t>(r) + 1, static_cast<std::size_t>(b));
        out.configs.push_back(std::move(config));
    }
    return out;
}

GeneratedTasks generate_tasks(const std::shared_ptr<const EnvironmentConfig>& config, int b, const Rng& rng) {
    if (!config) throw ConstraintError("generate_tasks: null configuration");
    if (b < 1) throw ConstraintError("generate_tasks: b must be positive");

    GeneratedTasks out;
    out.start_matrix.bins = b;
    out.goal_matrix.bins = b;

    const Assignment env_values = config->env_assignment();
    const Assignment defaults = config->task_defaults();
    std::vector<DimensionSpec> dims = extract_dimensions(config->resolved, DimensionLevel::task, env_values);

    std::vector<Assignment> start_rows, goal_rows;
    if (dims.empty()) {
        start_rows.assign(static_cast<std::size_t>(b), defaults);
        goal_rows = start_rows;
    } else {
        std::vector<FlatColumn> flat = flatten(dims);
        DrawnColumns start_drawn, goal_drawn;
        for (const FlatColumn& col : flat) {
            Rng col_rng = rng.split("task-col").split(col.name);
            // Two draws per stratum: the first feeds the start state, the
            // second the goal state. Each role gets its own permutation.
            std::vector<double> raw = stratified_units(b, 2, col_rng);
            std::vector<std::size_t> perm_start = col_rng.permutation(static_cast<std::size_t>(b));
            std::vector<std::size_t> perm_goal = col_rng.permutation(static_cast<std::size_t>(b));

            SampleColumn start_col, goal_col;
            start_col.name = goal_col.name = col.name;
            start_col.dimension_name = goal_col.dimension_name = dims[col.dim_index].attribute_name;
            start_col.stratum.resize(static_cast<std::size_t>(b));
            start_col.unit.resize(static_cast<std::size_t>(b));
            goal_col.stratum.resize(static_cast<std::size_t>(b));
            goal_col.unit.resize(static_cast<std::size_t>(b));
            for (int r = 0; r < b; ++r) {
                start_col.stratum[static_cast<std::size_t>(r)] = static_cast<int>(perm_start[static_cast<std::size_t>(r)]) + 1;
                start_col.unit[static_cast<std::size_t>(r)] = raw[perm_start[static_cast<std::size_t>(r)] * 2 + 0];
                goal_col.stratum[static_cast<std::size_t>(r)] = static_cast<int>(perm_goal[static_cast<std::size_t>(r)]) + 1;
                goal_col.unit[static_cast<std::size_t>(r)] = raw[perm_goal[static_cast<std::size_t>(r)] * 2 + 1];
            }
            start_drawn.columns.push_back(std::move(start_col));
            goal_drawn.columns.push_back(std::move(goal_col));
        }

        std::map<std::string, double> base = numeric_bindings(env_values);
        // Immutable task-level attributes keep their defaults in scope.
        for (const auto& [name, values] : defaults)
            if (values.size() == 1 && !is_category(values.front())) base.emplace(name, scalar_number(values.front()));

        start_rows = map_rows(dims, flat, start_drawn, b, base, rng.split("task-retry-start"));
        goal_rows = map_rows(dims, flat, goal_drawn, b, base, rng.split("task-retry-goal"));

        // Object-owned attributes are per-task scenery: the goal state keeps
        // the start placement, and only dynamic (agent) dimensions remain in
        // the goal audit matrix.
        for (std::size_t di = 0; di < dims.size(); ++di) {
            if (dims[di].owner.kind != OwnerRef::Kind::object) continue;
            for (int r = 0; r < b; ++r)
                goal_rows[static_cast<std::size_t>(r)][dims[di].attribute_name] =
                    start_rows[static_cast<std::size_t>(r)][dims[di].attribute_name];
        }
        out.start_matrix.columns = std::move(start_drawn.columns);
        for (std::size_t c = 0; c < flat.size(); ++c)
            if (dims[flat[c].dim_index].owner.kind != OwnerRef::Kind::object)
                out.goal_matrix.columns.push_back(std::move(goal_drawn.columns[c]));
    }

    for (int r = 0; r < b; ++r) {
        Task task;
        task.config = config;
        const std::string stem = config->config_id.empty() ? std::string("task") : config->config_id;
        task.task_id = stem + "_t" + padded_index(static_cast<std::size_t>(r) + 1, static_cast<std::size_t>(b));
        task.start_state = defaults;
        task.goal_state = defaults;
        for (const auto& [name, values] : start_rows[static_cast<std::size_t>(r)]) task.start_state[name] = values;
        for (const auto& [name, values] : goal_rows[static_cast<std::size_t>(r)]) task.goal_state[name] = values;
        out.tasks.push_back(std::move(task));
    }
    return out;
}

std::string serialize_task(const Task& task) {
    xml::Element root;
    root.name = "Task";
    root.attributes.emplace_back("id", task.task_id);
    root.attributes.emplace_back("config", task.config ? task.config->config_id : "");

    xml::Element start;
    start.name = "Start";
    start.children.push_back(template_to_xml(apply_task_assignment(*task.config, task.start_state).resolved));
    xml::Element goal;
    goal.name = "Goal";
    goal.children.push_back(template_to_xml(apply_task_assignment(*task.config, task.goal_state).resolved));
    root.children.push_back(std::move(start));
    root.children.push_back(std::move(goal));
    return xml::serialize(root);
}

Task parse_task(std::string_view xml_text) {
    xml::Element root = xml::parse(xml_text);
    if (root.name != "Task") throw ParseError("expected <Task> as the root tag, got <" + root.name + ">", root.line);
    Task task;
    std::string config_id;
    for (const auto& [key, value] : root.attributes) {
        if (key == "id") task.task_id = value;
        else if (key == "config") config_id = value;
        else throw ParseError("unknown attribute '" + key + "' on <Task>", root.line);
    }
    const xml::Element* start = root.first_child("Start");
    const xml::Element* goal = root.first_child("Goal");
    if (!start || !goal || root.children.size() != 2)
        throw ParseError("<Task> requires exactly one <Start> and one <Goal> block", root.line);
    if (start->children.size() != 1 || goal->children.size() != 1)
        throw ParseError("<Start> and <Goal> each wrap exactly one <Environment>", root.line);

    EnvironmentConfig start_config{config_id, template_from_xml(start->children.front())};
    EnvironmentConfig goal_config{config_id, template_from_xml(goal->children.front())};
    if (start_config.env_assignment() != goal_config.env_assignment())
        throw ParseError("start and goal blocks disagree on environment attributes", root.line);

    task.start_state = start_config.task_defaults();
    task.goal_state = goal_config.task_defaults();
    task.config = std::make_shared<const EnvironmentConfig>(std::move(start_config));
    return task;
}

} // namespace aiprobe
