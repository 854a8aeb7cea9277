#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/engine/engine.hpp"
#include "depsim/resources/topology.hpp"
#include "depsim/scenario/metrics.hpp"
#include "depsim/security/access.hpp"
#include "depsim/security/identity.hpp"

namespace depsim {

enum class AuthMode { mutual, unidirectional };

std::string_view to_string(AuthMode mode) noexcept;
AuthMode parse_auth_mode(std::string_view text);

class AuthFailed : public std::runtime_error {
public:
    AuthFailed(const std::string& who, std::string reason)
        : std::runtime_error("authentication failed for " + who + ": " + reason), reason_(std::move(reason)) {}
    [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

private:
    std::string reason_;
};

class NoSession : public std::out_of_range {
public:
    explicit NoSession(std::uint64_t id) : std::out_of_range("no such session: " + std::to_string(id)) {}
};

struct Session {
    std::uint64_t id = 0;
    std::string initiator;
    std::string responder;
    AuthMode mode = AuthMode::mutual;
    /// Handshake start plus its cost.
    SimTime established_at = 0.0;
    double cipher_overhead = 1.0;
    double cpu_per_byte_s = 0.0;
};

struct SecurityConfig {
    /// Compute time of one handshake on top of the round trips.
    double handshake_cost_s = 0.0;
    /// Size multiplier (>= 1) for protected messages.
    double cipher_overhead = 1.0;
    /// Seconds of endpoint compute per protected byte.
    double cpu_per_byte_s = 0.0;
};

struct ProtectedMessage {
    double bytes = 0.0;
    /// Busy time charged to each endpoint.
    double cpu_s = 0.0;
};

struct AttackPattern {
    std::string name;
    std::vector<std::string> sources;
    std::string target;
    /// Connection requests per second from each source.
    double rate = 0.0;
    SimTime start = 0.0;
    SimTime end = 0.0;
    std::string op = "get";
    double request_bytes = 1000.0;

    friend bool operator==(const AttackPattern&, const AttackPattern&) = default;
};

/// Certificates, sessions, access policies, traffic filters and attack
/// generation for one run. Writes security rows to the trace and the
/// `connections_received`, `throughput_bps` and `attacks_detected` metrics.
class SecurityService {
public:
    SecurityService(Engine& engine, Topology& topology, MetricsStore& metrics, SecurityConfig config = {});

    [[nodiscard]] const SecurityConfig& config() const noexcept { return config_; }
    VoRegistry& vos() noexcept { return vos_; }
    [[nodiscard]] const VoRegistry& vos() const noexcept { return vos_; }

    void trust(const std::string& issuer) { trust_.insert(issuer); }
    [[nodiscard]] const std::set<std::string>& trusted() const noexcept { return trust_; }

    /// Identity presented by a component (PU, server, center).
    void issue(const std::string& component, const Certificate& cert);
    [[nodiscard]] const Certificate* certificate_of(std::string_view component) const;
    /// Revokes every issued certificate with this subject.
    void revoke(const std::string& subject);

    /// Throws NoRoute or AuthFailed. The session is usable from
    /// now + 2 * round trip + handshake cost.
    Session authenticate(const std::string& initiator, const std::string& responder, AuthMode mode);
    /// Handshake duration between two components (no validation).
    [[nodiscard]] double handshake_time(const std::string& a, const std::string& b) const;
    /// Throws NoSession.
    [[nodiscard]] ProtectedMessage protect_message(std::uint64_t session, double bytes) const;

    void set_policy(AccessPolicy policy);
    [[nodiscard]] const AccessPolicy* policy(std::string_view resource) const;
    /// Validates the certificate, then applies the resource's policy. Denials
    /// are traced; attack-classified ones also bump `attacks_detected`.
    AccessDecision authorize_op(const Certificate& cert, const std::string& resource, const std::string& op,
                                const std::optional<Demand>& demand = std::nullopt,
                                const std::string& requester = {});

    /// Rules may be added at any time; they take effect for later packets.
    void add_rule(const std::string& component, const FilterRule& rule);
    [[nodiscard]] const std::vector<FilterRule>& rules(std::string_view component) const;
    /// Filters a packet at the receiving component; admitted packets count as
    /// a received connection and add to its throughput.
    bool admit(const std::string& component, const Packet& packet, double bytes);

    /// Schedules the connection requests of a DoS pattern.
    void launch_attack(const AttackPattern& pattern, std::function<void(const std::string& source)> on_request);

    [[nodiscard]] std::uint64_t attacks_detected() const noexcept { return attacks_; }
    [[nodiscard]] std::uint64_t denied() const noexcept { return denied_; }
    [[nodiscard]] std::uint64_t dropped() const noexcept { return dropped_; }
    [[nodiscard]] std::uint64_t requests_launched() const noexcept { return launched_; }

    static constexpr std::string_view kId = "security";

private:
    Engine& engine_;
    Topology& topology_;
    MetricsStore& metrics_;
    SecurityConfig config_;
    VoRegistry vos_;
    std::set<std::string> trust_;
    std::map<std::string, Certificate, std::less<>> certs_;
    std::map<std::uint64_t, Session> sessions_;
    std::uint64_t next_session_ = 1;
    std::map<std::string, AccessPolicy, std::less<>> policies_;
    std::map<std::string, std::vector<FilterRule>, std::less<>> filters_;
    std::uint64_t attacks_ = 0;
    std::uint64_t denied_ = 0;
    std::uint64_t dropped_ = 0;
    std::uint64_t launched_ = 0;
};

}  // namespace depsim
