#include "depsim/security/identity.hpp"

#include <algorithm>

namespace depsim {

std::string_view to_string(CertStatus status) noexcept {
    switch (status) {
        case CertStatus::valid: return "valid";
        case CertStatus::expired: return "expired";
        case CertStatus::not_yet_valid: return "not-yet-valid";
        case CertStatus::unknown_issuer: return "unknown-issuer";
        case CertStatus::revoked: return "revoked";
    }
    return "?";
}

CertStatus validate_cert(const Certificate& cert, SimTime at, const std::set<std::string>& trust) {
    if (!trust.contains(cert.issuer)) return CertStatus::unknown_issuer;
    if (cert.revoked) return CertStatus::revoked;
    if (at < cert.not_before) return CertStatus::not_yet_valid;
    if (at > cert.not_after) return CertStatus::expired;
    return CertStatus::valid;
}

Certificate mint_proxy(const Certificate& parent, SimTime now, double lifetime) {
    if (!(lifetime > 0.0)) {
        throw std::invalid_argument("proxy lifetime must be > 0");
    }
    Certificate proxy = parent;
    proxy.subject = parent.subject + "/proxy";
    proxy.delegated_from = parent.subject;
    proxy.not_before = now;
    proxy.not_after = std::min(parent.not_after, now + lifetime);
    return proxy;
}

VirtualOrganization& VoRegistry::create(const std::string& name, const std::vector<std::string>& components) {
    if (name.empty()) {
        throw std::invalid_argument("VO name must not be empty");
    }
    if (vos_.contains(name)) {
        throw DuplicateVo(name);
    }
    auto& vo = vos_[name];
    vo.name = name;
    vo.components.insert(components.begin(), components.end());
    return vo;
}

VirtualOrganization& VoRegistry::mutable_get(std::string_view name) {
    auto it = vos_.find(name);
    if (it == vos_.end()) throw UnknownVo(std::string(name));
    return it->second;
}

const VirtualOrganization& VoRegistry::get(std::string_view name) const {
    auto it = vos_.find(name);
    if (it == vos_.end()) throw UnknownVo(std::string(name));
    return it->second;
}

void VoRegistry::join_component(const std::string& vo, const std::string& component) {
    mutable_get(vo).components.insert(component);
}

void VoRegistry::join_subject(const std::string& vo, const std::string& subject) {
    mutable_get(vo).subjects.insert(subject);
}

bool VoRegistry::contains(std::string_view name) const { return vos_.find(name) != vos_.end(); }

std::vector<std::string> VoRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [n, vo] : vos_) out.push_back(n);
    return out;
}

std::vector<std::string> VoRegistry::vos_of(std::string_view component) const {
    std::vector<std::string> out;
    for (const auto& [n, vo] : vos_) {
        if (vo.components.find(std::string(component)) != vo.components.end()) out.push_back(n);
    }
    return out;
}

}  // namespace depsim
