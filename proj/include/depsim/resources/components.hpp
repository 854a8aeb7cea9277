#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace depsim {

enum class ComponentKind { center, processing_unit, link, router, database, storage, scheduler };

std::string_view to_string(ComponentKind kind) noexcept;

enum class Health { operational, crashed };

class UnknownComponent : public std::out_of_range {
public:
    explicit UnknownComponent(const std::string& id) : std::out_of_range("unknown component: " + id) {}
};

struct ComponentInfo {
    std::string id;
    ComponentKind kind = ComponentKind::center;
    /// Hosting regional center; empty for routers, WAN links and the scheduler.
    std::string center;
    Health health = Health::operational;
    bool permanently_down = false;
};

/// Identity, kind and operational state of every simulated component.
class ComponentRegistry {
public:
    const ComponentInfo& add(std::string id, ComponentKind kind, std::string center = {});

    [[nodiscard]] bool contains(std::string_view id) const;
    [[nodiscard]] const ComponentInfo& info(std::string_view id) const;
    [[nodiscard]] bool is_operational(std::string_view id) const;

    void set_crashed(std::string_view id, bool permanent);
    void set_operational(std::string_view id);

    /// All ids in lexicographic order.
    [[nodiscard]] std::vector<std::string> ids() const;
    [[nodiscard]] std::vector<std::string> ids_of(ComponentKind kind) const;

private:
    ComponentInfo& mutable_info(std::string_view id);

    std::map<std::string, ComponentInfo, std::less<>> components_;
};

}  // namespace depsim
