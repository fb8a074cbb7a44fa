#include "aiprobe/oracle.hpp"

#include "aiprobe/errors.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>
#include <unordered_set>

namespace aiprobe {

namespace {

    using Clock = std::chrono::steady_clock;
    using PlanSegments = std::vector<std::vector<int>>;

    std::string plan_bytes(const PlanSegments& segments) {
        std::string out;
        for (const std::vector<int>& segment : segments) {
            for (int a : segment) out.push_back(static_cast<char>('0' + a));
            out.push_back('|');
        }
        return out;
    }

    std::vector<int> flatten(const PlanSegments& segments) {
        std::vector<int> out;
        for (const std::vector<int>& segment : segments) out.insert(out.end(), segment.begin(), segment.end());
        return out;
    }

    struct SearchContext {
        const Task& task;
        const Simulator& sim;
        const SearchParams& params;
        const StateObserver& observer;
        SimState goal;
        Rng node_streams;
        std::unordered_set<std::string> visited;   // (canonical state, plan) pairs
        std::unordered_set<std::string> expanded;  // instrumentation only
        SearchStats stats;
        Clock::time_point deadline;
        bool timed_out = false;
        PlanSegments solution;

        bool out_of_budget() {
            if (stats.sim_steps > params.search_step_budget || visited.size() >= params.visited_cap ||
                Clock::now() > deadline) {
                timed_out = true;
            }
            return timed_out;
        }

        // sim_apply with per-step observation and step accounting.
        StepOutcome apply(SimState state, const std::vector<int>& actions) {
            StepOutcome outcome;
            if (state.unfavorable || state.at_goal) {
                outcome.status = state.unfavorable ? StepOutcome::Status::reached_unfavorable
                                                   : StepOutcome::Status::reached_goal;
                outcome.final_state = std::move(state);
                return outcome;
            }
            for (int action : actions) {
                state = sim.apply_action(state, action);
                ++stats.sim_steps;
                ++outcome.steps_consumed;
                if (observer) observer(state);
                if (state.unfavorable) {
                    outcome.status = StepOutcome::Status::reached_unfavorable;
                    outcome.final_state = std::move(state);
                    return outcome;
                }
                if (state.at_goal) {
                    outcome.status = StepOutcome::Status::reached_goal;
                    outcome.final_state = std::move(state);
                    return outcome;
                }
            }
            outcome.status = StepOutcome::Status::ok;
            outcome.final_state = std::move(state);
            return outcome;
        }
    };

    bool search_node(SearchContext& ctx, const SimState& state, PlanSegments plan, int h, int depth) {
        if (ctx.out_of_budget()) return false;
        if (depth > ctx.params.max_depth) return false; // reached max depth

        if (state.unfavorable) {
            if (plan.empty()) return false; // terminal start state
            // Roll back one sampled sub-sequence and try other paths from the
            // predecessor (whose pair is already visited, so control returns
            // to the enclosing expansion loop).
            auto [prev, prev_plan] = backtrack(ctx.task, ctx.sim, plan, &ctx.stats);
            int prev_h = heuristic(ctx.sim.schema(), prev, ctx.goal, ctx.params.bins);
            return search_node(ctx, prev, std::move(prev_plan), prev_h, depth + 1);
        }

        std::string key = canonical_key(ctx.sim.schema(), state) + "#" + plan_bytes(plan);
        if (ctx.visited.count(key)) return false; // avoid revisiting (state, plan) pairs
        ctx.visited.insert(key);
        if (!ctx.expanded.insert(key).second) ++ctx.stats.duplicate_expansions;
        ++ctx.stats.nodes_expanded;

        if (state.at_goal) {
            ctx.solution = std::move(plan);
            return true;
        }

        const std::uint64_t node_id = Rng::hash_bytes(plan_bytes(plan));
        for (int i = 0; i < ctx.params.paths_per_iteration; ++i) {
            if (ctx.out_of_budget()) return false;
            // Candidate streams are keyed by (node, i), not drawn serially,
            // so enlarging N or D only appends exploration.
            Rng candidate_rng = ctx.node_streams.split(node_id).split(static_cast<std::uint64_t>(i));
            std::vector<int> segment(static_cast<std::size_t>(h));
            for (int& action : segment)
                action = static_cast<int>(candidate_rng.below(ctx.sim.action_count()));

            StepOutcome outcome = ctx.apply(state, segment);
            // Keep only the consumed prefix: overshooting the goal must not
            // discard a valid solution, and unapplied actions stay out of the
            // plan when execution halts early.
            segment.resize(outcome.steps_consumed);

            PlanSegments next_plan = plan;
            next_plan.push_back(std::move(segment));
            int next_h = heuristic(ctx.sim.schema(), outcome.final_state, ctx.goal, ctx.params.bins);
            if (search_node(ctx, outcome.final_state, std::move(next_plan), next_h, depth + 1)) return true;
        }
        return false;
    }

    void verify_replay(const Task& task, const Simulator& sim, const std::vector<int>& plan, SearchStats* stats) {
        StepOutcome replay = sim_apply(sim, sim.initial_state(), plan);
        if (stats) stats->sim_steps += replay.steps_consumed;
        if (replay.status != StepOutcome::Status::reached_goal)
            throw SimError("oracle returned an unsound plan for task '" + task.task_id + "'");
    }

} // namespace

std::string_view verdict_name(SearchVerdict v) {
    switch (v) {
        case SearchVerdict::feasible: return "feasible";
        case SearchVerdict::infeasible: return "infeasible";
        case SearchVerdict::exhausted: return "exhausted";
        case SearchVerdict::timeout: return "timeout";
    }
    return "?";
}

void SearchStats::accumulate(const SearchStats& other) {
    nodes_expanded += other.nodes_expanded;
    sim_steps += other.sim_steps;
    backtracks += other.backtracks;
    rounds += other.rounds;
    duplicate_expansions += other.duplicate_expansions;
    wall_ms += other.wall_ms;
}

int heuristic(const StateSchema& schema, const SimState& current, const SimState& goal, int b) {
    if (current.values.size() != schema.slots.size() || goal.values.size() != schema.slots.size())
        throw SimError("heuristic: states do not match the schema");
    if (canonical_key(schema, current) == canonical_key(schema, goal)) return 0;
    long long h = 0;
    for (std::size_t i = 0; i < schema.slots.size(); ++i) {
        const StateSlot& slot = schema.slots[i];
        if (slot.categorical) {
            h += current.values[i] != goal.values[i] ? 1 : 0;
        } else {
            h += std::abs(bin_index(current.values[i], slot.lo, slot.hi, b) -
                          bin_index(goal.values[i], slot.lo, slot.hi, b));
        }
    }
    return static_cast<int>(std::max(1LL, h));
}

std::pair<SimState, std::vector<std::vector<int>>> backtrack(const Task& task, const Simulator& sim,
                                                             const std::vector<std::vector<int>>& plan_segments,
                                                             SearchStats* stats) {
    if (plan_segments.empty()) throw SimError("backtrack: empty plan for task '" + task.task_id + "'");
    PlanSegments prefix(plan_segments.begin(), plan_segments.end() - 1);
    if (stats) ++stats->backtracks;
    SimState state = sim.initial_state();
    StepOutcome replay = sim_apply(sim, std::move(state), flatten(prefix));
    if (stats) stats->sim_steps += replay.steps_consumed;
    return {std::move(replay.final_state), std::move(prefix)};
}

SearchResult search(const Task& task, const Simulator& sim, const SearchParams& params,
                    const StateObserver& observer) {
    auto start_time = Clock::now();
    SearchContext ctx{task,     sim, params, observer, sim.goal_state(), Rng(params.seed), {}, {}, {},
                      start_time + params.time_budget, false, {}};

    SimState initial = sim.initial_state();
    if (observer) observer(initial);
    int h0 = heuristic(sim.schema(), initial, ctx.goal, params.bins);
    bool found = search_node(ctx, initial, {}, h0, 0);

    SearchResult result;
    result.stats = ctx.stats;
    result.stats.rounds = 1;
    if (found) {
        result.verdict = SearchVerdict::feasible;
        result.plan = flatten(ctx.solution);
        verify_replay(task, sim, result.plan, &result.stats);
    } else {
        result.verdict = ctx.timed_out ? SearchVerdict::timeout : SearchVerdict::exhausted;
    }
    result.stats.wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(Clock::now() - start_time).count();
    return result;
}

SearchResult bfs_verify(const Task& task, const Simulator& sim, const SearchParams& params,
                        const StateObserver& observer) {
    auto start_time = Clock::now();
    auto deadline = start_time + params.time_budget;
    SearchResult result;

    struct Node {
        SimState state;
        std::size_t parent;
        int action;
    };
    std::vector<Node> nodes;
    std::unordered_set<std::string> visited;

    auto finish = [&](SearchVerdict verdict) {
        result.verdict = verdict;
        result.stats.wall_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(Clock::now() - start_time).count();
        return result;
    };

    SimState start = sim.initial_state();
    if (observer) observer(start);
    // An unfavorable start is skipped like any other unfavorable state, so
    // the frontier is empty from the outset.
    if (start.unfavorable) return finish(SearchVerdict::infeasible);
    if (start.at_goal) return finish(SearchVerdict::feasible); // empty plan

    nodes.push_back({std::move(start), 0, -1});
    visited.insert(canonical_key(sim.schema(), nodes.front().state));
    std::size_t head = 0;
    while (head < nodes.size()) {
        if (Clock::now() > deadline || result.stats.sim_steps > params.bfs_step_budget ||
            nodes.size() > params.bfs_node_cap)
            return finish(SearchVerdict::timeout);
        const std::size_t at = head++;
        ++result.stats.nodes_expanded;
        for (int action = 0; action < static_cast<int>(sim.action_count()); ++action) {
            SimState next = sim.apply_action(nodes[at].state, action);
            ++result.stats.sim_steps;
            if (observer) observer(next);
            if (next.unfavorable) continue; // unfavorable states are never entered
            if (next.at_goal) {
                std::vector<int> plan{action};
                for (std::size_t n = at; nodes[n].action >= 0; n = nodes[n].parent) plan.push_back(nodes[n].action);
                std::reverse(plan.begin(), plan.end());
                result.plan = std::move(plan);
                verify_replay(task, sim, result.plan, &result.stats);
                return finish(SearchVerdict::feasible);
            }
            std::string key = canonical_key(sim.schema(), next);
            if (!visited.insert(key).second) continue;
            nodes.push_back({std::move(next), at, action});
        }
    }
    return finish(SearchVerdict::infeasible);
}

OracleOutcome solve_task(const Task& task, const Simulator& sim, const SearchParams& params,
                         const StateObserver& observer) {
    OracleOutcome outcome;

    std::uint64_t steps_left = params.search_step_budget;
    auto phase_deadline = Clock::now() + params.time_budget;
    for (std::uint64_t round = 0; round < params.max_rounds; ++round) {
        SearchParams round_params = params;
        round_params.search_step_budget = steps_left;
        round_params.seed = Rng::combine(params.seed, round);
        round_params.time_budget =
            std::chrono::duration_cast<std::chrono::milliseconds>(phase_deadline - Clock::now());
        if (round_params.time_budget.count() <= 0) {
            outcome.search_verdict = SearchVerdict::timeout;
            break;
        }

        SearchResult round_result = search(task, sim, round_params, observer);
        outcome.search_stats.accumulate(round_result.stats);
        outcome.search_verdict = round_result.verdict;
        if (round_result.verdict == SearchVerdict::feasible) {
            outcome.verdict = SearchVerdict::feasible;
            outcome.plan = std::move(round_result.plan);
            return outcome;
        }
        if (round_result.verdict == SearchVerdict::timeout) break;
        if (round_result.stats.sim_steps >= steps_left) {
            outcome.search_verdict = SearchVerdict::timeout;
            break;
        }
        steps_left -= round_result.stats.sim_steps;
    }

    outcome.bfs_ran = true;
    SearchResult verification = bfs_verify(task, sim, params, observer);
    outcome.bfs_stats = verification.stats;
    outcome.bfs_verdict = verification.verdict;
    outcome.verdict = verification.verdict;
    if (verification.verdict == SearchVerdict::feasible) outcome.plan = std::move(verification.plan);
    return outcome;
}

} // namespace aiprobe
