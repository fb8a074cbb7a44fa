#pragma once

#include "aiprobe/sampler.hpp"
#include "aiprobe/sim.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace aiprobe {

// A pluggable domain: builds simulators and black-box agents for tasks whose
// configuration carries the matching Environment type.
class DomainPlugin {
  public:
    virtual ~DomainPlugin() = default;

    virtual std::string name() const = 0; // matches <Environment type="...">
    virtual std::vector<std::string> agent_variants() const = 0;
    virtual std::unique_ptr<Simulator> make_simulator(const Task& task) const = 0;
    virtual std::unique_ptr<Agent> make_agent(const std::string& variant, const Task& task) const = 0;
};

class DomainRegistry {
  public:
    void add(std::unique_ptr<DomainPlugin> plugin);
    const DomainPlugin* find(const std::string& env_type) const;
    const DomainPlugin& require(const std::string& env_type) const; // throws SimError
    std::vector<std::string> names() const;

  private:
    std::map<std::string, std::unique_ptr<DomainPlugin>> plugins_;
};

// Process-wide registry, preloaded with the built-in domains.
DomainRegistry& domain_registry();

} // namespace aiprobe
