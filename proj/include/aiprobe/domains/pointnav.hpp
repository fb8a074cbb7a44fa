#pragma once

#include "aiprobe/registry.hpp"

#include <memory>
#include <string_view>

namespace aiprobe::pointnav {

// Continuous 2D point navigation with circular hazards. The base model plans
// around hazards; the defective variants ignore them.
enum class Variant { base, inacc_state, inacc_reward, both };

Variant variant_from_name(std::string_view name);
std::string_view variant_name(Variant v);

// Stock template: a square arena with count-bound circular hazards and one
// point agent; moves have a fixed step length and the goal is a disc.
std::string default_template_xml();

std::unique_ptr<Simulator> make_simulator(const Task& task);
std::unique_ptr<Agent> make_pointnav_agent(Variant variant, const Task& task);
std::unique_ptr<DomainPlugin> make_domain();

} // namespace aiprobe::pointnav
