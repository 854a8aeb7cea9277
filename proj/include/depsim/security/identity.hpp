#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/engine/engine.hpp"

namespace depsim {

class DuplicateVo : public std::invalid_argument {
public:
    explicit DuplicateVo(const std::string& vo) : std::invalid_argument("duplicate VO: " + vo) {}
};

class UnknownVo : public std::out_of_range {
public:
    explicit UnknownVo(const std::string& vo) : std::out_of_range("unknown VO: " + vo) {}
};

/// X.509-like identity. No key material, only what validation looks at.
struct Certificate {
    std::string subject;
    std::string issuer;
    SimTime not_before = 0.0;
    SimTime not_after = 0.0;
    std::set<std::string> vo_memberships;
    bool revoked = false;
    /// Subject of the certificate this proxy was minted from.
    std::string delegated_from;

    friend bool operator==(const Certificate&, const Certificate&) = default;
};

enum class CertStatus { valid, expired, not_yet_valid, unknown_issuer, revoked };

std::string_view to_string(CertStatus status) noexcept;

/// Checks run in order: issuer trust, revocation, validity window.
[[nodiscard]] CertStatus validate_cert(const Certificate& cert, SimTime at, const std::set<std::string>& trust);

/// Delegation: same issuer and VO rights, validity clipped to
/// [now, min(parent.not_after, now + lifetime)].
[[nodiscard]] Certificate mint_proxy(const Certificate& parent, SimTime now, double lifetime);

struct VirtualOrganization {
    std::string name;
    std::set<std::string> components;
    std::set<std::string> subjects;
};

class VoRegistry {
public:
    /// Throws DuplicateVo.
    VirtualOrganization& create(const std::string& name, const std::vector<std::string>& components = {});
    /// Idempotent. Throws UnknownVo.
    void join_component(const std::string& vo, const std::string& component);
    void join_subject(const std::string& vo, const std::string& subject);

    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] const VirtualOrganization& get(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;
    /// VOs listing the component, in name order.
    [[nodiscard]] std::vector<std::string> vos_of(std::string_view component) const;

private:
    VirtualOrganization& mutable_get(std::string_view name);

    std::map<std::string, VirtualOrganization, std::less<>> vos_;
};

}  // namespace depsim
