#include "depsim/security/access.hpp"

#include <fnmatch.h>

#include <stdexcept>

namespace depsim {

unsigned parse_permissions(std::string_view text) {
    unsigned perms = perm_none;
    for (char c : text) {
        switch (c) {
            case 'r': perms |= perm_read; break;
            case 'w': perms |= perm_write; break;
            case 'x': perms |= perm_execute; break;
            case '-': break;
            default: throw std::invalid_argument("bad permission string: " + std::string(text));
        }
    }
    return perms;
}

std::string format_permissions(unsigned perms) {
    std::string out;
    out += (perms & perm_read) ? 'r' : '-';
    out += (perms & perm_write) ? 'w' : '-';
    out += (perms & perm_execute) ? 'x' : '-';
    return out;
}

unsigned required_permission(std::string_view op) noexcept {
    if (op == "read" || op == "get" || op == "query") return perm_read;
    if (op == "write" || op == "create") return perm_write;
    if (op == "execute" || op == "submit") return perm_execute;
    return perm_none;
}

AccessDecision authorize(const Certificate& cert, const AccessPolicy* policy, std::string_view op,
                         const std::optional<Demand>& demand) {
    if (policy == nullptr) {
        return {false, false, "no-policy"};
    }
    if (policy->attack_ops.find(std::string(op)) != policy->attack_ops.end()) {
        return {false, true, "attack-op"};
    }
    const unsigned need = required_permission(op);
    if (need == perm_none) {
        return {false, false, "unknown-op"};
    }
    bool permitted = false;
    for (const auto& vo : cert.vo_memberships) {
        auto g = policy->grants.find(vo);
        if (g == policy->grants.end() || (g->second & need) == 0) continue;
        permitted = true;
        if (demand) {
            auto c = policy->caps.find(vo);
            if (c != policy->caps.end()) {
                if ((c->second.max_work && demand->work > *c->second.max_work) ||
                    (c->second.max_memory && demand->memory > *c->second.max_memory)) {
                    continue;
                }
            }
        }
        return {true, false, "granted"};
    }
    return {false, false, permitted ? "over-cap" : "no-grant"};
}

bool glob_match(const std::string& pattern, const std::string& text) {
    return ::fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

bool matches(const FilterRule& rule, const Packet& packet) {
    return glob_match(rule.src, packet.src) && glob_match(rule.dst, packet.dst) &&
           glob_match(rule.msg_type, packet.msg_type);
}

FilterAction evaluate(const std::vector<FilterRule>& rules, const Packet& packet) {
    for (const auto& r : rules) {
        if (matches(r, packet)) return r.action;
    }
    return FilterAction::allow;
}

}  // namespace depsim
