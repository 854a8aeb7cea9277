#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/resources/components.hpp"

namespace depsim {

class ServerDown : public std::runtime_error {
public:
    explicit ServerDown(const std::string& id) : std::runtime_error("database server is down: " + id) {}
};

struct DatabaseServer {
    std::string id;
    std::string center;
    double base_latency_s = 0.0;
    /// Bytes per second.
    double throughput_Bps = 1e8;
    /// Mass storage accepts read and write only.
    bool storage = false;
};

struct DbOpResult {
    double delay = 0.0;
    /// Set when a Byzantine fault made this reply a wrong value.
    bool wrong_value = false;
};

/// Database servers and mass storage units with an infinite-server delay
/// model: every operation takes base_latency + size / throughput.
class DatabaseService {
public:
    explicit DatabaseService(ComponentRegistry& registry) : registry_(registry) {}

    void add(const DatabaseServer& server);
    [[nodiscard]] bool contains(std::string_view id) const { return servers_.find(id) != servers_.end(); }
    [[nodiscard]] const DatabaseServer& server(std::string_view id) const;
    [[nodiscard]] std::vector<std::string> ids() const;

    [[nodiscard]] double service_time(std::string_view id, double size_bytes) const;

    /// Throws ServerDown when the server is crashed and invalid_argument for
    /// an operation the server does not support.
    DbOpResult serve(std::string_view id, std::string_view op, double size_bytes);

    /// The next query-like reply from this server carries a wrong value.
    void corrupt_next(const std::string& id);

    [[nodiscard]] static bool is_known_op(std::string_view op);

private:
    ComponentRegistry& registry_;
    std::map<std::string, DatabaseServer, std::less<>> servers_;
    std::set<std::string, std::less<>> corrupt_armed_;
};

}  // namespace depsim
