#include "depsim/resources/topology.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>

namespace depsim {

void Topology::add_center(const std::string& id, double lan_capacity_bps, double lan_latency_s) {
    registry_.add(id, ComponentKind::center, id);
    const std::string lan = id + ".lan";
    registry_.add(lan, ComponentKind::link, id);
    links_.emplace(lan, Link{LinkSpec{lan, id, id, lan_capacity_bps, lan_latency_s}, true, 0.0});
    adjacency_[id];
}

void Topology::add_router(const std::string& id) {
    registry_.add(id, ComponentKind::router);
    adjacency_[id];
}

void Topology::add_link(const LinkSpec& spec) {
    for (const auto& end : {spec.a, spec.b}) {
        const auto kind = registry_.info(end).kind;
        if (kind != ComponentKind::center && kind != ComponentKind::router) {
            throw std::invalid_argument("link " + spec.id + " endpoint " + end + " is not a center or router");
        }
    }
    if (spec.a == spec.b) {
        throw std::invalid_argument("link " + spec.id + " joins a node to itself");
    }
    if (!(spec.capacity_bps > 0.0) || spec.latency_s < 0.0) {
        throw std::invalid_argument("link " + spec.id + " needs capacity > 0 and latency >= 0");
    }
    registry_.add(spec.id, ComponentKind::link);
    links_.emplace(spec.id, Link{spec, false, 0.0});
    auto insert_sorted = [&](const std::string& node, const std::string& other) {
        auto& adj = adjacency_[node];
        adj.emplace_back(spec.id, other);
        std::sort(adj.begin(), adj.end());
    };
    insert_sorted(spec.a, spec.b);
    insert_sorted(spec.b, spec.a);
}

void Topology::attach(const std::string& component, ComponentKind kind, const std::string& center) {
    if (registry_.info(center).kind != ComponentKind::center) {
        throw std::invalid_argument(center + " is not a regional center");
    }
    registry_.add(component, kind, center);
}

bool Topology::has_link(std::string_view id) const { return links_.find(id) != links_.end(); }

const Link& Topology::link(std::string_view id) const {
    auto it = links_.find(id);
    if (it == links_.end()) {
        throw UnknownComponent(std::string(id));
    }
    return it->second;
}

Link& Topology::link(std::string_view id) {
    auto it = links_.find(id);
    if (it == links_.end()) {
        throw UnknownComponent(std::string(id));
    }
    return it->second;
}

std::vector<std::string> Topology::link_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, l] : links_) {
        out.push_back(id);
    }
    return out;
}

std::string Topology::gateway(std::string_view node) const {
    const auto& info = registry_.info(node);
    if (info.kind == ComponentKind::router || info.kind == ComponentKind::center) {
        return info.id;
    }
    if (info.center.empty()) {
        throw std::invalid_argument("component " + info.id + " is not attached to the network");
    }
    return info.center;
}

std::optional<std::vector<std::string>> Topology::wan_path(const std::string& from, const std::string& to,
                                                           const Usable& usable) const {
    if (from == to) {
        return std::vector<std::string>{};
    }
    auto node_ok = [&](const std::string& n) {
        return registry_.info(n).kind == ComponentKind::center || usable(n);
    };
    if (!node_ok(from) || !node_ok(to)) {
        return std::nullopt;
    }
    // Hop distance to `to`, then a greedy walk taking the smallest link id that
    // descends: the lexicographically smallest among shortest paths.
    std::map<std::string, int, std::less<>> dist;
    std::deque<std::string> frontier{to};
    dist[to] = 0;
    while (!frontier.empty()) {
        const std::string u = frontier.front();
        frontier.pop_front();
        auto adj = adjacency_.find(u);
        if (adj == adjacency_.end()) continue;
        for (const auto& [lid, v] : adj->second) {
            if (!usable(lid) || !node_ok(v) || dist.contains(v)) continue;
            dist[v] = dist[u] + 1;
            frontier.push_back(v);
        }
    }
    if (!dist.contains(from)) {
        return std::nullopt;
    }
    std::vector<std::string> path;
    std::string u = from;
    while (u != to) {
        const int d = dist[u];
        const auto& adj = adjacency_.find(u)->second;
        bool stepped = false;
        for (const auto& [lid, v] : adj) {
            auto dv = dist.find(v);
            if (usable(lid) && dv != dist.end() && dv->second == d - 1) {
                path.push_back(lid);
                u = v;
                stepped = true;
                break;
            }
        }
        if (!stepped) {
            return std::nullopt;
        }
    }
    return path;
}

std::optional<std::vector<std::string>> Topology::find_route(std::string_view src, std::string_view dst,
                                                             const Usable& usable) const {
    if (src == dst) {
        return std::vector<std::string>{};
    }
    const auto& s = registry_.info(src);
    const auto& d = registry_.info(dst);
    const std::string gs = gateway(src);
    const std::string gd = gateway(dst);
    const bool s_lan = s.kind != ComponentKind::router;
    const bool d_lan = d.kind != ComponentKind::router;
    std::vector<std::string> path;
    if (gs == gd) {
        const std::string lan = gs + ".lan";
        if (!usable(lan)) return std::nullopt;
        path.push_back(lan);
        return path;
    }
    if (s_lan) {
        if (!usable(gs + ".lan")) return std::nullopt;
        path.push_back(gs + ".lan");
    }
    auto middle = wan_path(gs, gd, usable);
    if (!middle) return std::nullopt;
    path.insert(path.end(), middle->begin(), middle->end());
    if (d_lan) {
        if (!usable(gd + ".lan")) return std::nullopt;
        path.push_back(gd + ".lan");
    }
    return path;
}

std::vector<std::string> Topology::route(std::string_view src, std::string_view dst) const {
    auto path = find_route(src, dst, [this](std::string_view id) { return registry_.is_operational(id); });
    if (!path) {
        throw NoRoute(src, dst);
    }
    return *path;
}

bool Topology::eventually_routable(std::string_view src, std::string_view dst) const {
    return find_route(src, dst, [this](std::string_view id) {
               return !registry_.info(id).permanently_down;
           }).has_value();
}

double Topology::latency(const std::vector<std::string>& path) const {
    double total = 0.0;
    for (const auto& id : path) {
        total += link(id).spec.latency_s;
    }
    return total;
}

double Topology::bottleneck(const std::vector<std::string>& path) const {
    double cap = std::numeric_limits<double>::infinity();
    for (const auto& id : path) {
        cap = std::min(cap, link(id).spec.capacity_bps);
    }
    return cap;
}

bool Topology::traverses(const std::vector<std::string>& path, std::string_view component) const {
    for (const auto& id : path) {
        if (id == component) return true;
        const auto& l = link(id);
        if (!l.lan && (l.spec.a == component || l.spec.b == component)) return true;
    }
    return false;
}

std::vector<std::string> Topology::routers_on(const std::vector<std::string>& path) const {
    std::vector<std::string> out;
    for (const auto& id : path) {
        const auto& l = link(id);
        if (l.lan) continue;
        for (const auto& end : {l.spec.a, l.spec.b}) {
            if (registry_.info(end).kind == ComponentKind::router &&
                std::find(out.begin(), out.end(), end) == out.end()) {
                out.push_back(end);
            }
        }
    }
    return out;
}

}  // namespace depsim
