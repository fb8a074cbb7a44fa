#pragma once

#include "aiprobe/registry.hpp"

#include <memory>
#include <string_view>

namespace aiprobe::lava {

// Agent model fidelities. The base model knows lava is terminal; all three
// defective models plan as if lava tiles were ordinary floor, which makes
// their policies identical by construction.
enum class Variant { base, inacc_state, inacc_reward, both };

Variant variant_from_name(std::string_view name);
std::string_view variant_name(Variant v);

// The stock grid-world template: grid_size in [3, 50], lava_count in
// [0, grid_size^2], count-bound lava tiles, one agent with (x, y, d).
std::string default_template_xml();

std::unique_ptr<Simulator> make_simulator(const Task& task);
std::unique_ptr<Agent> make_lava_agent(Variant variant, const Task& task);
std::unique_ptr<DomainPlugin> make_domain();

} // namespace aiprobe::lava
