#include "depsim/resources/components.hpp"

namespace depsim {

std::string_view to_string(ComponentKind kind) noexcept {
    switch (kind) {
        case ComponentKind::center: return "center";
        case ComponentKind::processing_unit: return "pu";
        case ComponentKind::link: return "link";
        case ComponentKind::router: return "router";
        case ComponentKind::database: return "db";
        case ComponentKind::storage: return "storage";
        case ComponentKind::scheduler: return "scheduler";
    }
    return "?";
}

const ComponentInfo& ComponentRegistry::add(std::string id, ComponentKind kind, std::string center) {
    if (id.empty()) {
        throw std::invalid_argument("component id must not be empty");
    }
    auto [it, inserted] = components_.emplace(id, ComponentInfo{id, kind, std::move(center)});
    if (!inserted) {
        throw std::invalid_argument("duplicate component id: " + id);
    }
    return it->second;
}

bool ComponentRegistry::contains(std::string_view id) const { return components_.find(id) != components_.end(); }

const ComponentInfo& ComponentRegistry::info(std::string_view id) const {
    auto it = components_.find(id);
    if (it == components_.end()) {
        throw UnknownComponent(std::string(id));
    }
    return it->second;
}

ComponentInfo& ComponentRegistry::mutable_info(std::string_view id) {
    auto it = components_.find(id);
    if (it == components_.end()) {
        throw UnknownComponent(std::string(id));
    }
    return it->second;
}

bool ComponentRegistry::is_operational(std::string_view id) const {
    auto it = components_.find(id);
    return it != components_.end() && it->second.health == Health::operational;
}

void ComponentRegistry::set_crashed(std::string_view id, bool permanent) {
    auto& c = mutable_info(id);
    c.health = Health::crashed;
    c.permanently_down = c.permanently_down || permanent;
}

void ComponentRegistry::set_operational(std::string_view id) {
    auto& c = mutable_info(id);
    if (c.permanently_down) {
        throw std::logic_error("component is permanently down: " + c.id);
    }
    c.health = Health::operational;
}

std::vector<std::string> ComponentRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(components_.size());
    for (const auto& [id, c] : components_) {
        out.push_back(id);
    }
    return out;
}

std::vector<std::string> ComponentRegistry::ids_of(ComponentKind kind) const {
    std::vector<std::string> out;
    for (const auto& [id, c] : components_) {
        if (c.kind == kind) {
            out.push_back(id);
        }
    }
    return out;
}

}  // namespace depsim
