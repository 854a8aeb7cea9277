#include "depsim/resources/database.hpp"

#include <array>
#include <cmath>

namespace depsim {

namespace {

constexpr std::array<std::string_view, 5> kOps{"read", "write", "create", "query", "get"};

}  // namespace

bool DatabaseService::is_known_op(std::string_view op) {
    for (auto k : kOps) {
        if (k == op) return true;
    }
    return false;
}

void DatabaseService::add(const DatabaseServer& server) {
    const auto kind = registry_.info(server.id).kind;
    if (kind != ComponentKind::database && kind != ComponentKind::storage) {
        throw std::invalid_argument(server.id + " is not registered as a database or storage");
    }
    if (server.base_latency_s < 0.0 || !(server.throughput_Bps > 0.0)) {
        throw std::invalid_argument("database " + server.id + " needs base latency >= 0 and throughput > 0");
    }
    servers_.emplace(server.id, server);
}

const DatabaseServer& DatabaseService::server(std::string_view id) const {
    auto it = servers_.find(id);
    if (it == servers_.end()) {
        throw UnknownComponent(std::string(id));
    }
    return it->second;
}

std::vector<std::string> DatabaseService::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, s] : servers_) {
        out.push_back(id);
    }
    return out;
}

double DatabaseService::service_time(std::string_view id, double size_bytes) const {
    if (!(size_bytes >= 0.0) || !std::isfinite(size_bytes)) {
        throw std::invalid_argument("operation size must be finite and >= 0");
    }
    const auto& s = server(id);
    return s.base_latency_s + size_bytes / s.throughput_Bps;
}

DbOpResult DatabaseService::serve(std::string_view id, std::string_view op, double size_bytes) {
    const auto& s = server(id);
    if (!is_known_op(op)) {
        throw std::invalid_argument("unknown database operation: " + std::string(op));
    }
    if (s.storage && op != "read" && op != "write") {
        throw std::invalid_argument("mass storage supports read and write only");
    }
    if (!registry_.is_operational(id)) {
        throw ServerDown(s.id);
    }
    DbOpResult result{service_time(id, size_bytes), false};
    if (op != "write" && op != "create") {
        result.wrong_value = corrupt_armed_.erase(s.id) > 0;
    }
    return result;
}

void DatabaseService::corrupt_next(const std::string& id) {
    (void)server(id);
    corrupt_armed_.insert(id);
}

}  // namespace depsim
