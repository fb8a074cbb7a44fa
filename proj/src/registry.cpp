#include "aiprobe/registry.hpp"

#include "aiprobe/domains/lava.hpp"
#include "aiprobe/domains/pointnav.hpp"
#include "aiprobe/errors.hpp"

namespace aiprobe {

void DomainRegistry::add(std::unique_ptr<DomainPlugin> plugin) {
    std::string key = plugin->name();
    plugins_[key] = std::move(plugin);
}

const DomainPlugin* DomainRegistry::find(const std::string& env_type) const {
    auto it = plugins_.find(env_type);
    return it == plugins_.end() ? nullptr : it->second.get();
}

const DomainPlugin& DomainRegistry::require(const std::string& env_type) const {
    const DomainPlugin* plugin = find(env_type);
    if (!plugin) {
        std::string known;
        for (const auto& [name, _] : plugins_) known += (known.empty() ? "" : ", ") + name;
        throw SimError("no registered domain for environment type '" + env_type + "' (known: " + known + ")");
    }
    return *plugin;
}

std::vector<std::string> DomainRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : plugins_) out.push_back(name);
    return out;
}

DomainRegistry& domain_registry() {
    static DomainRegistry registry = [] {
        DomainRegistry r;
        r.add(lava::make_domain());
        r.add(pointnav::make_domain());
        return r;
    }();
    return registry;
}

} // namespace aiprobe
