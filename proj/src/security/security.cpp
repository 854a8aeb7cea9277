#include "depsim/security/security.hpp"

#include <memory>

#include "depsim/workload/activity.hpp"

namespace depsim {

std::string_view to_string(AuthMode mode) noexcept {
    return mode == AuthMode::mutual ? "mutual" : "unidirectional";
}

AuthMode parse_auth_mode(std::string_view text) {
    if (text == "mutual") return AuthMode::mutual;
    if (text == "unidirectional") return AuthMode::unidirectional;
    throw std::invalid_argument("unknown authentication mode: " + std::string(text));
}

SecurityService::SecurityService(Engine& engine, Topology& topology, MetricsStore& metrics, SecurityConfig config)
    : engine_(engine), topology_(topology), metrics_(metrics), config_(config) {
    if (config_.cipher_overhead < 1.0) {
        throw std::invalid_argument("cipher overhead must be >= 1");
    }
    if (config_.handshake_cost_s < 0.0 || config_.cpu_per_byte_s < 0.0) {
        throw std::invalid_argument("security costs must be >= 0");
    }
}

void SecurityService::issue(const std::string& component, const Certificate& cert) {
    for (const auto& vo : cert.vo_memberships) {
        vos_.join_subject(vo, cert.subject);
    }
    certs_[component] = cert;
}

const Certificate* SecurityService::certificate_of(std::string_view component) const {
    auto it = certs_.find(component);
    return it == certs_.end() ? nullptr : &it->second;
}

void SecurityService::revoke(const std::string& subject) {
    for (auto& [c, cert] : certs_) {
        if (cert.subject == subject) cert.revoked = true;
    }
    engine_.record("revoke", kId, subject);
}

double SecurityService::handshake_time(const std::string& a, const std::string& b) const {
    const double rtt = 2.0 * topology_.latency(topology_.route(a, b));
    return 2.0 * rtt + config_.handshake_cost_s;
}

Session SecurityService::authenticate(const std::string& initiator, const std::string& responder, AuthMode mode) {
    const double cost = handshake_time(initiator, responder);
    const SimTime now = engine_.now();
    auto check = [&](const std::string& who) -> std::string {
        const Certificate* cert = certificate_of(who);
        if (cert == nullptr) return "no-certificate";
        const auto status = validate_cert(*cert, now, trust_);
        return status == CertStatus::valid ? std::string() : std::string(to_string(status));
    };
    std::vector<std::string> parties{responder};
    if (mode == AuthMode::mutual) parties.insert(parties.begin(), initiator);
    for (const auto& who : parties) {
        const auto reason = check(who);
        if (!reason.empty()) {
            engine_.record("auth-fail", initiator, responder,
                           "mode=" + std::string(to_string(mode)) + ";who=" + who + ";reason=" + reason);
            throw AuthFailed(who, reason);
        }
    }
    Session s{next_session_++, initiator, responder, mode, now + cost, config_.cipher_overhead,
              config_.cpu_per_byte_s};
    sessions_.emplace(s.id, s);
    engine_.record("auth-ok", initiator, responder,
                   "mode=" + std::string(to_string(mode)) + ";session=" + std::to_string(s.id) +
                       ";cost=" + format_real(cost));
    return s;
}

ProtectedMessage SecurityService::protect_message(std::uint64_t session, double bytes) const {
    auto it = sessions_.find(session);
    if (it == sessions_.end()) throw NoSession(session);
    if (bytes < 0.0) throw std::invalid_argument("message size must be >= 0");
    return ProtectedMessage{bytes * it->second.cipher_overhead, bytes * it->second.cpu_per_byte_s};
}

void SecurityService::set_policy(AccessPolicy policy) {
    const std::string resource = policy.resource;
    policies_[resource] = std::move(policy);
}

const AccessPolicy* SecurityService::policy(std::string_view resource) const {
    auto it = policies_.find(resource);
    return it == policies_.end() ? nullptr : &it->second;
}

AccessDecision SecurityService::authorize_op(const Certificate& cert, const std::string& resource,
                                             const std::string& op, const std::optional<Demand>& demand,
                                             const std::string& requester) {
    AccessDecision d;
    const auto status = validate_cert(cert, engine_.now(), trust_);
    if (status != CertStatus::valid) {
        d = AccessDecision{false, false, std::string(to_string(status))};
    } else {
        d = authorize(cert, policy(resource), op, demand);
    }
    if (d.allowed) return d;
    ++denied_;
    const std::string who = requester.empty() ? cert.subject : requester;
    engine_.record("deny", resource, who, "op=" + op + ";reason=" + d.reason + ";attack=" + (d.attack ? "1" : "0"));
    if (d.attack) {
        ++attacks_;
        metrics_.add("attacks_detected", resource);
        engine_.record("attack", resource, who, "op=" + op);
    }
    return d;
}

void SecurityService::add_rule(const std::string& component, const FilterRule& rule) {
    filters_[component].push_back(rule);
}

const std::vector<FilterRule>& SecurityService::rules(std::string_view component) const {
    static const std::vector<FilterRule> none;
    auto it = filters_.find(component);
    return it == filters_.end() ? none : it->second;
}

bool SecurityService::admit(const std::string& component, const Packet& packet, double bytes) {
    if (evaluate(rules(component), packet) == FilterAction::deny) {
        ++dropped_;
        engine_.record("filter-drop", component, packet.src, "dst=" + packet.dst + ";type=" + packet.msg_type);
        return false;
    }
    const SimTime now = engine_.now();
    metrics_.add_windowed("connections_received", component, now, 1.0);
    metrics_.add_windowed("throughput_bps", component, now, bytes * 8.0 / metrics_.window());
    return true;
}

void SecurityService::launch_attack(const AttackPattern& pattern,
                                    std::function<void(const std::string& source)> on_request) {
    if (pattern.rate < 0.0 || pattern.end < pattern.start) {
        throw std::invalid_argument("bad attack pattern " + pattern.name);
    }
    if (pattern.rate == 0.0) return;
    auto handler = std::make_shared<std::function<void(const std::string&)>>(std::move(on_request));
    for (const auto& src : pattern.sources) {
        SeededRng rng = engine_.substream("attack:" + pattern.name + ":" + src);
        const ArrivalPattern arrivals{ArrivalKind::poisson, pattern.rate, -1, pattern.start, pattern.end};
        for (SimTime t : arrival_times(arrivals, rng)) {
            ++launched_;
            engine_.schedule(t, EventSpec{EventKind::user, "", src, pattern.target, "attack=" + pattern.name},
                             [handler, src] { (*handler)(src); });
        }
    }
}

}  // namespace depsim
