#pragma once

#include "aiprobe/env_template.hpp"
#include "aiprobe/sampler.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aiprobe {

// One scalar slot of the task-level state vector. Slots mirror the mutable
// task-level dimensions of a configuration; object-owned slots are scenery
// that stays fixed during an episode.
struct StateSlot {
    std::string name;      // display name, "agent.x" or "waypoints[2]"
    std::string attribute; // owning qualified attribute name
    int sub_index = 0;     // position within a list-valued attribute
    bool categorical = false;
    double lo = 0.0, hi = 0.0;
    std::vector<std::string> categories;
    bool scenario = false; // object-owned
};

struct StateSchema {
    std::vector<StateSlot> slots;

    std::size_t index_of(std::string_view name) const; // throws SimError if missing
};

// Flattened state schema for the mutable task-level dimensions of a config.
StateSchema schema_from_dimensions(const std::vector<DimensionSpec>& dims);

struct SimState {
    std::vector<double> values; // slot order; categorical stored as 0-based index
    bool at_goal = false;
    bool unfavorable = false;
};

// Converts a full task-level assignment into slot values, validating bounds
// and category membership. Flags are left for the simulator to derive.
SimState state_values_from_assignment(const StateSchema& schema, const Assignment& assignment);

// Schema-ordered text key with reals at 12 significant digits. Two states
// with equal attribute assignments produce equal keys.
std::string canonical_key(const StateSchema& schema, const SimState& state);

struct StepOutcome {
    enum class Status { ok, reached_unfavorable, reached_goal };

    SimState final_state;
    Status status = Status::ok;
    std::size_t steps_consumed = 0;
};

// A coverage dimension of the domain's state space (the paper-style 100^D
// binning operates over these).
struct CoverageDim {
    std::string name;
    bool categorical = false;
    double lo = 0.0, hi = 0.0;
    int category_count = 0;
};

// Deterministic simulator bound to one (configuration, task) pair. Pure
// value-state machine: apply_action never mutates the simulator, so one
// instance can replay any number of action sequences.
class Simulator {
  public:
    virtual ~Simulator() = default;

    const StateSchema& schema() const { return schema_; }
    const std::vector<std::string>& action_names() const { return actions_; }
    std::size_t action_count() const { return actions_.size(); }
    int action_index(std::string_view name) const; // throws SimError on unknown symbol

    virtual SimState initial_state() const = 0;
    virtual SimState goal_state() const = 0;
    virtual SimState apply_action(const SimState& state, int action) const = 0;

    virtual std::uint64_t default_max_steps() const = 0;

    virtual const std::vector<CoverageDim>& coverage_dims() const = 0;
    virtual std::vector<double> coverage_values(const SimState& state) const = 0;

  protected:
    StateSchema schema_;
    std::vector<std::string> actions_;
};

// Applies actions in order, halting at the first unfavorable or goal state.
// Pure function of (state, actions); unfavorable halting takes precedence.
StepOutcome sim_apply(const Simulator& sim, SimState state, std::span<const int> actions);

struct AgentTrace {
    enum class Terminal { goal, unfavorable, step_limit, cycle_detected, invalid_action };

    std::vector<SimState> states; // length == actions.size() + 1
    std::vector<int> actions;
    Terminal terminal_status = Terminal::step_limit;

    bool reached_goal() const { return terminal_status == Terminal::goal; }
};

std::string_view terminal_name(AgentTrace::Terminal t);

// Black-box agent: receives only its declared observation and returns an
// action index. Deterministic and memoryless, which is what makes
// revisited-state cycle detection sound.
class Agent {
  public:
    virtual ~Agent() = default;

    virtual std::string name() const = 0;

    // Slot names the agent observes; the derived key "hazard" maps to the
    // state's unfavorable flag. Defective agents declare truncated lists.
    virtual const std::vector<std::string>& observation_keys() const = 0;

    virtual int act(const std::vector<double>& observation) = 0;
};

// Steps the simulator under the agent's policy until goal, unfavorable
// state, a revisited state, an invalid action, or max_steps.
AgentTrace run_agent(Agent& agent, const Simulator& sim, std::uint64_t max_steps);

} // namespace aiprobe
