#include "aiprobe/sim.hpp"

#include "aiprobe/errors.hpp"

#include <algorithm>
#include <unordered_set>

namespace aiprobe {

std::size_t StateSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < slots.size(); ++i)
        if (slots[i].name == name) return i;
    throw SimError("state schema has no slot named '" + std::string(name) + "'");
}

StateSchema schema_from_dimensions(const std::vector<DimensionSpec>& dims) {
    StateSchema schema;
    for (const DimensionSpec& dim : dims) {
        for (int k = 0; k < dim.values_per_sample; ++k) {
            StateSlot slot;
            slot.attribute = dim.attribute_name;
            slot.sub_index = k;
            slot.name = dim.values_per_sample > 1 ? dim.attribute_name + "[" + std::to_string(k) + "]"
                                                  : dim.attribute_name;
            slot.categorical = dim.categorical;
            slot.lo = dim.lo;
            slot.hi = dim.hi;
            slot.categories = dim.categories;
            slot.scenario = dim.owner.kind == OwnerRef::Kind::object;
            schema.slots.push_back(std::move(slot));
        }
    }
    return schema;
}

SimState state_values_from_assignment(const StateSchema& schema, const Assignment& assignment) {
    SimState state;
    state.values.reserve(schema.slots.size());
    for (const StateSlot& slot : schema.slots) {
        auto it = assignment.find(slot.attribute);
        if (it == assignment.end()) throw SimError("assignment is missing attribute '" + slot.attribute + "'");
        if (slot.sub_index >= static_cast<int>(it->second.size()))
            throw SimError("attribute '" + slot.attribute + "' has too few values");
        const Scalar& value = it->second[static_cast<std::size_t>(slot.sub_index)];
        if (slot.categorical) {
            if (!is_category(value)) throw SimError("slot '" + slot.name + "' expects a categorical value");
            const std::string& label = std::get<std::string>(value);
            auto pos = std::find(slot.categories.begin(), slot.categories.end(), label);
            if (pos == slot.categories.end())
                throw SimError("label '" + label + "' is not a category of slot '" + slot.name + "'");
            state.values.push_back(static_cast<double>(pos - slot.categories.begin()));
        } else {
            double v = scalar_number(value);
            if (v < slot.lo || v > slot.hi)
                throw SimError("value " + format_double(v) + " of slot '" + slot.name + "' is outside [" +
                               format_double(slot.lo) + ", " + format_double(slot.hi) + "]");
            state.values.push_back(v);
        }
    }
    return state;
}

std::string canonical_key(const StateSchema& schema, const SimState& state) {
    if (state.values.size() != schema.slots.size()) throw SimError("state does not match its schema");
    std::string key;
    key.reserve(state.values.size() * 8);
    for (std::size_t i = 0; i < state.values.size(); ++i) {
        if (i) key += '|';
        double v = state.values[i];
        if (schema.slots[i].categorical || v == static_cast<double>(static_cast<long long>(v)))
            key += std::to_string(static_cast<long long>(v));
        else
            key += format_double_sig12(v);
    }
    return key;
}

int Simulator::action_index(std::string_view name) const {
    for (std::size_t i = 0; i < actions_.size(); ++i)
        if (actions_[i] == name) return static_cast<int>(i);
    throw SimError("unknown action symbol '" + std::string(name) + "'");
}

StepOutcome sim_apply(const Simulator& sim, SimState state, std::span<const int> actions) {
    StepOutcome outcome;
    if (state.unfavorable) {
        outcome.final_state = std::move(state);
        outcome.status = StepOutcome::Status::reached_unfavorable;
        return outcome;
    }
    if (state.at_goal) {
        outcome.final_state = std::move(state);
        outcome.status = StepOutcome::Status::reached_goal;
        return outcome;
    }
    for (int action : actions) {
        if (action < 0 || action >= static_cast<int>(sim.action_count()))
            throw SimError("action index " + std::to_string(action) + " is outside the action space");
        state = sim.apply_action(state, action);
        ++outcome.steps_consumed;
        if (state.unfavorable) {
            outcome.final_state = std::move(state);
            outcome.status = StepOutcome::Status::reached_unfavorable;
            return outcome;
        }
        if (state.at_goal) {
            outcome.final_state = std::move(state);
            outcome.status = StepOutcome::Status::reached_goal;
            return outcome;
        }
    }
    outcome.final_state = std::move(state);
    outcome.status = StepOutcome::Status::ok;
    return outcome;
}

std::string_view terminal_name(AgentTrace::Terminal t) {
    switch (t) {
        case AgentTrace::Terminal::goal: return "goal";
        case AgentTrace::Terminal::unfavorable: return "unfavorable";
        case AgentTrace::Terminal::step_limit: return "step_limit";
        case AgentTrace::Terminal::cycle_detected: return "cycle_detected";
        case AgentTrace::Terminal::invalid_action: return "invalid_action";
    }
    return "?";
}

AgentTrace run_agent(Agent& agent, const Simulator& sim, std::uint64_t max_steps) {
    AgentTrace trace;

    // Resolve the agent's observation keys once. "hazard" is the derived
    // on-an-unfavorable-state flag; everything else must be a slot name.
    std::vector<int> slots; // -1 encodes the hazard flag
    for (const std::string& key : agent.observation_keys()) {
        if (key == "hazard") slots.push_back(-1);
        else slots.push_back(static_cast<int>(sim.schema().index_of(key)));
    }

    SimState state = sim.initial_state();
    std::unordered_set<std::string> seen;
    trace.states.push_back(state);
    for (;;) {
        // Goal beats unfavorable here so that the trace invariant
        // "terminal == goal iff the last state is a goal state" holds even
        // for pathological tasks whose goal cell is itself unfavorable.
        if (state.at_goal) {
            trace.terminal_status = AgentTrace::Terminal::goal;
            return trace;
        }
        if (state.unfavorable) {
            trace.terminal_status = AgentTrace::Terminal::unfavorable;
            return trace;
        }
        if (trace.actions.size() >= max_steps) {
            trace.terminal_status = AgentTrace::Terminal::step_limit;
            return trace;
        }
        if (!seen.insert(canonical_key(sim.schema(), state)).second) {
            trace.terminal_status = AgentTrace::Terminal::cycle_detected;
            return trace;
        }

        std::vector<double> observation;
        observation.reserve(slots.size());
        for (int slot : slots)
            observation.push_back(slot < 0 ? (state.unfavorable ? 1.0 : 0.0)
                                           : state.values[static_cast<std::size_t>(slot)]);
        int action = agent.act(observation);
        if (action < 0 || action >= static_cast<int>(sim.action_count())) {
            trace.terminal_status = AgentTrace::Terminal::invalid_action;
            return trace;
        }
        state = sim.apply_action(state, action);
        trace.actions.push_back(action);
        trace.states.push_back(state);
    }
}

} // namespace aiprobe
