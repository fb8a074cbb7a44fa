#pragma once

#include "aiprobe/domains/lava.hpp"
#include "aiprobe/domains/pointnav.hpp"
#include "aiprobe/env_template.hpp"
#include "aiprobe/registry.hpp"
#include "aiprobe/sampler.hpp"
#include "aiprobe/sim.hpp"

#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace test_util {

struct Pose {
    int x, y;
    std::string d = "east";
};

// Builds a concrete Lava task: an n x n grid with the given tile cells and
// agent start/goal poses.
inline aiprobe::Task make_lava_task(int n, const std::vector<std::pair<int, int>>& tiles, const Pose& start,
                                    const Pose& goal) {
    aiprobe::EnvironmentTemplate tmpl = aiprobe::parse_template(aiprobe::lava::default_template_xml());
    aiprobe::Assignment env;
    env["grid_size"] = {static_cast<std::int64_t>(n)};
    env["lava_count"] = {static_cast<std::int64_t>(tiles.size())};
    auto config = std::make_shared<const aiprobe::EnvironmentConfig>([&] {
        aiprobe::EnvironmentConfig c = aiprobe::instantiate(tmpl, env);
        c.config_id = "test_cfg";
        return c;
    }());

    aiprobe::Task task;
    task.task_id = "test_task";
    task.config = config;
    task.start_state = config->task_defaults();
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const std::string id = "lava_" + std::to_string(i + 1);
        task.start_state[id + ".x"] = {static_cast<std::int64_t>(tiles[i].first)};
        task.start_state[id + ".y"] = {static_cast<std::int64_t>(tiles[i].second)};
    }
    task.goal_state = task.start_state;
    task.start_state["agent.x"] = {static_cast<std::int64_t>(start.x)};
    task.start_state["agent.y"] = {static_cast<std::int64_t>(start.y)};
    task.start_state["agent.d"] = {start.d};
    task.goal_state["agent.x"] = {static_cast<std::int64_t>(goal.x)};
    task.goal_state["agent.y"] = {static_cast<std::int64_t>(goal.y)};
    task.goal_state["agent.d"] = {goal.d};
    return task;
}

struct Disc {
    double x, y, radius;
};

inline aiprobe::Task make_pointnav_task(double arena, const std::vector<Disc>& hazards, std::pair<double, double> start,
                                        std::pair<double, double> goal) {
    aiprobe::EnvironmentTemplate tmpl = aiprobe::parse_template(aiprobe::pointnav::default_template_xml());
    aiprobe::Assignment env;
    env["arena_size"] = {arena};
    env["hazard_count"] = {static_cast<std::int64_t>(hazards.size())};
    auto config = std::make_shared<const aiprobe::EnvironmentConfig>([&] {
        aiprobe::EnvironmentConfig c = aiprobe::instantiate(tmpl, env);
        c.config_id = "test_cfg";
        return c;
    }());

    aiprobe::Task task;
    task.task_id = "test_task";
    task.config = config;
    task.start_state = config->task_defaults();
    for (std::size_t i = 0; i < hazards.size(); ++i) {
        const std::string id = "hazard_" + std::to_string(i + 1);
        task.start_state[id + ".x"] = {hazards[i].x};
        task.start_state[id + ".y"] = {hazards[i].y};
        task.start_state[id + ".radius"] = {hazards[i].radius};
    }
    task.goal_state = task.start_state;
    task.start_state["agent.x"] = {start.first};
    task.start_state["agent.y"] = {start.second};
    task.goal_state["agent.x"] = {goal.first};
    task.goal_state["agent.y"] = {goal.second};
    return task;
}

// Independent exhaustive reachability oracle: iterative depth-first search
// with a visited set over raw simulator steps, no unfavorable state entered.
// Deliberately distinct from the breadth-first verifier it cross-checks.
inline bool exhaustive_reachable(const aiprobe::Simulator& sim) {
    aiprobe::SimState start = sim.initial_state();
    if (start.unfavorable) return false;
    if (start.at_goal) return true;
    std::set<std::string> visited{aiprobe::canonical_key(sim.schema(), start)};
    std::vector<aiprobe::SimState> stack{start};
    while (!stack.empty()) {
        aiprobe::SimState state = stack.back();
        stack.pop_back();
        for (int a = static_cast<int>(sim.action_count()) - 1; a >= 0; --a) {
            aiprobe::SimState next = sim.apply_action(state, a);
            if (next.unfavorable) continue;
            if (next.at_goal) return true;
            if (visited.insert(aiprobe::canonical_key(sim.schema(), next)).second) stack.push_back(next);
        }
    }
    return false;
}

} // namespace test_util
