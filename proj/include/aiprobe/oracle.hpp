#pragma once

#include "aiprobe/binning.hpp"
#include "aiprobe/rng.hpp"
#include "aiprobe/sampler.hpp"
#include "aiprobe/sim.hpp"

#include <chrono>
#include <functional>
#include <string_view>
#include <vector>

namespace aiprobe {

// Knobs of the agent-independent feasibility oracle. Budgets are expressed
// in simulator steps so verdicts stay deterministic; the wall-clock budget
// is an outer guard for pathological cases.
struct SearchParams {
    int bins = 100;              // b: bins for the heuristic (and LHS alignment)
    int paths_per_iteration = 5; // N: candidate sequences sampled per node
    int max_depth = 50;          // D: recursion depth cap, backtracks included
    std::uint64_t search_step_budget = 200'000; // simulator steps for the heuristic-search phase
    std::uint64_t bfs_step_budget = 2'000'000;  // simulator steps for the verifier
    std::uint64_t max_rounds = 1'000;           // search invocations per task before giving up
    std::uint64_t visited_cap = 1'000'000;      // (state, plan) pairs one invocation may retain
    std::uint64_t bfs_node_cap = 4'000'000;     // verifier frontier memory cap
    std::chrono::milliseconds time_budget{10'000}; // wall-clock guard per phase
    std::uint64_t seed = 0;
};

enum class SearchVerdict { feasible, infeasible, exhausted, timeout };

std::string_view verdict_name(SearchVerdict v);

struct SearchStats {
    std::uint64_t nodes_expanded = 0;
    std::uint64_t sim_steps = 0;
    std::uint64_t backtracks = 0;
    std::uint64_t rounds = 0;
    std::uint64_t duplicate_expansions = 0; // instrumentation; stays zero
    double wall_ms = 0.0;

    void accumulate(const SearchStats& other);
};

struct SearchResult {
    SearchVerdict verdict = SearchVerdict::exhausted;
    std::vector<int> plan; // action indices; meaningful when feasible
    SearchStats stats;
};

// Called on every state the oracle's simulations visit (coverage tallies).
using StateObserver = std::function<void(const SimState&)>;

// L1 distance between the bin indices of the two states' attributes:
// numeric slots contribute |bin(current) - bin(goal)| under b bins, equal
// categorical slots 0 and unequal ones 1. Equal states give 0, anything else
// at least 1.
int heuristic(const StateSchema& schema, const SimState& current, const SimState& goal, int b);

// One invocation of the heuristic-guided depth-limited search. Returns
// feasible (plan verified by replay), exhausted (every sampled path failed
// within the depth bound), or timeout (a budget tripped). Never reports
// infeasible; that is the verifier's job.
SearchResult search(const Task& task, const Simulator& sim, const SearchParams& params,
                    const StateObserver& observer = nullptr);

// Drops the most recent sampled sub-sequence from a segmented plan and
// recomputes the predecessor state by replaying the shortened plan from the
// start state (no inverse dynamics). Throws on an empty plan.
std::pair<SimState, std::vector<std::vector<int>>> backtrack(const Task& task, const Simulator& sim,
                                                             const std::vector<std::vector<int>>& plan_segments,
                                                             SearchStats* stats = nullptr);

// Breadth-first feasibility verifier: explores one action per edge, skips
// unfavorable states, and is the only engine allowed to conclude
// infeasible. Feasible plans are shortest in action count.
SearchResult bfs_verify(const Task& task, const Simulator& sim, const SearchParams& params,
                        const StateObserver& observer = nullptr);

// The full oracle pipeline: heuristic-search rounds (fresh sampling streams
// per round) within the step budget, then the BFS verifier when no plan was
// found. `verdict` is feasible, infeasible, or timeout.
struct OracleOutcome {
    SearchVerdict verdict = SearchVerdict::timeout;
    std::vector<int> plan;
    SearchVerdict search_verdict = SearchVerdict::exhausted; // heuristic engine alone
    SearchVerdict bfs_verdict = SearchVerdict::timeout;      // verifier, when it ran
    bool bfs_ran = false;
    SearchStats search_stats;
    SearchStats bfs_stats;
};

OracleOutcome solve_task(const Task& task, const Simulator& sim, const SearchParams& params,
                         const StateObserver& observer = nullptr);

} // namespace aiprobe
