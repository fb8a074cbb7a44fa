#pragma once

#include "aiprobe/env_template.hpp"
#include "aiprobe/rng.hpp"
#include "aiprobe/scalar.hpp"

#include <memory>
#include <string>
#include <vector>

namespace aiprobe {

// Audit record of one flattened scalar sampling column: the stratum index
// drawn for each row and the raw unit-interval sample before it was mapped
// onto the dimension's range or categories. Stratum occupancy proofs and the
// stratification tests read these instead of the mapped values.
struct SampleColumn {
    std::string name;           // "attr" or "attr[k]" for list-valued attributes
    std::string dimension_name; // owning DimensionSpec qualified name
    std::vector<int> stratum;   // per row, 1-based in [1, b]
    std::vector<double> unit;   // per row, in [0, 1)
};

struct SampleMatrix {
    int bins = 0;
    std::vector<SampleColumn> columns;

    const SampleColumn* find(const std::string& column_name) const;
};

// --- core LHS primitives ---------------------------------------------------

// Classical stratified sampling: the range [lo, hi] is divided into b equal
// strata and per_stratum points are drawn uniformly from each. Entry
// r*per_stratum + j is sample j of the stratum assigned to row r; row order
// is a uniform random permutation of the strata.
std::vector<double> lhs_continuous(double lo, double hi, int b, int per_stratum, Rng& rng);

// Categorical LHS: unit-interval samples are inverse-mapped onto k equal
// segments, one per category.
std::vector<std::string> lhs_categorical(const std::vector<std::string>& categories, int b, int per_stratum,
                                         Rng& rng);

// Smallest 1-based i with unit <= i/k (the inverse category mapping).
int category_index_from_unit(double unit, int k);

// --- configuration and task generation --------------------------------------

struct Task {
    std::string task_id;
    std::shared_ptr<const EnvironmentConfig> config;
    Assignment start_state; // full task-level assignment
    Assignment goal_state;  // full task-level assignment
};

struct GeneratedConfigs {
    std::vector<EnvironmentConfig> configs;
    SampleMatrix matrix;
};

// Draws b environment configurations. Dimensions whose bounds reference
// other attributes are mapped in dependency order, per row, so constraints
// like [0, grid_size^2] hold for every emitted config. With no env-level
// mutable dimensions this returns b copies of the default configuration.
GeneratedConfigs generate_env_configs(const EnvironmentTemplate& tmpl, int b, const Rng& rng,
                                      const std::string& config_id_prefix = "c");

struct GeneratedTasks {
    std::vector<Task> tasks;
    SampleMatrix start_matrix;
    SampleMatrix goal_matrix; // dynamic (agent-owned) dimensions only
};

// Draws b (start, goal) pairs for one configuration: two samples per stratum
// in each mutable task-level dimension, the first feeding the start state and
// the second the goal state, with an independent stratum permutation per
// (dimension, role). Object-owned attributes describe scenery placed once
// per task, so the goal state reuses their start values.
GeneratedTasks generate_tasks(const std::shared_ptr<const EnvironmentConfig>& config, int b, const Rng& rng);

// --- task files --------------------------------------------------------------

// <Task id=...> wrapping two Environment blocks (tags Start and Goal), each
// in the template format with task-level values applied.
std::string serialize_task(const Task& task);
Task parse_task(std::string_view xml_text);

} // namespace aiprobe
