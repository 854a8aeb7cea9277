#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/resources/components.hpp"

namespace depsim {

class NoRoute : public std::runtime_error {
public:
    NoRoute(std::string_view src, std::string_view dst)
        : std::runtime_error("no operational route from " + std::string(src) + " to " + std::string(dst)) {}
};

struct LinkSpec {
    std::string id;
    std::string a;
    std::string b;
    double capacity_bps = 1e9;
    double latency_s = 0.0;
};

struct Link {
    LinkSpec spec;
    bool lan = false;
    /// Severity of an active omission fault, 0 when healthy.
    double loss_fraction = 0.0;
};

/// Regional centers, routers and the links joining them.
///
/// Each center owns one LAN link (`<center>.lan`) shared by everything it
/// hosts; WAN links join centers and routers. Routes are fewest-link paths
/// over operational links and routers, ties broken by lexicographic link ids.
class Topology {
public:
    explicit Topology(ComponentRegistry& registry) : registry_(registry) {}

    void add_center(const std::string& id, double lan_capacity_bps, double lan_latency_s);
    void add_router(const std::string& id);
    void add_link(const LinkSpec& spec);
    /// Registers a center-hosted component (PU, database, storage).
    void attach(const std::string& component, ComponentKind kind, const std::string& center);

    [[nodiscard]] bool has_link(std::string_view id) const;
    [[nodiscard]] const Link& link(std::string_view id) const;
    Link& link(std::string_view id);
    [[nodiscard]] std::vector<std::string> link_ids() const;

    /// Throws NoRoute when no operational path exists.
    [[nodiscard]] std::vector<std::string> route(std::string_view src, std::string_view dst) const;
    /// True when a path exists if every transiently crashed component recovers.
    [[nodiscard]] bool eventually_routable(std::string_view src, std::string_view dst) const;

    [[nodiscard]] double latency(const std::vector<std::string>& path) const;
    /// Smallest capacity on the path (bits/s); infinity for an empty path.
    [[nodiscard]] double bottleneck(const std::vector<std::string>& path) const;
    [[nodiscard]] bool traverses(const std::vector<std::string>& path, std::string_view component) const;
    /// Routers crossed by the path, in order of appearance.
    [[nodiscard]] std::vector<std::string> routers_on(const std::vector<std::string>& path) const;

    /// Center hosting a component, or the id itself for centers and routers.
    [[nodiscard]] std::string gateway(std::string_view node) const;

private:
    using Usable = std::function<bool(std::string_view)>;

    std::optional<std::vector<std::string>> find_route(std::string_view src, std::string_view dst,
                                                       const Usable& usable) const;
    std::optional<std::vector<std::string>> wan_path(const std::string& from, const std::string& to,
                                                     const Usable& usable) const;

    ComponentRegistry& registry_;
    std::map<std::string, Link, std::less<>> links_;
    // WAN adjacency: node -> (link id, neighbour), sorted by link id.
    std::map<std::string, std::vector<std::pair<std::string, std::string>>, std::less<>> adjacency_;
};

}  // namespace depsim
