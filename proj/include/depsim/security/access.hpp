#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/security/identity.hpp"

namespace depsim {

enum Permission : unsigned { perm_none = 0, perm_read = 4, perm_write = 2, perm_execute = 1 };

/// Parses "rwx"-style strings ("rw-", "r", "x", "-").
[[nodiscard]] unsigned parse_permissions(std::string_view text);
[[nodiscard]] std::string format_permissions(unsigned perms);

/// Permission an operation needs: read/get/query need r, write/create
/// need w, execute/submit need x; anything else maps to nothing.
[[nodiscard]] unsigned required_permission(std::string_view op) noexcept;

struct ResourceCap {
    std::optional<double> max_work;
    std::optional<double> max_memory;

    friend bool operator==(const ResourceCap&, const ResourceCap&) = default;
};

struct AccessPolicy {
    std::string resource;
    /// VO name to permission bits.
    std::map<std::string, unsigned> grants;
    /// Operations whose denial counts as an attack.
    std::set<std::string> attack_ops;
    /// Per-VO caps on submitted job requirements.
    std::map<std::string, ResourceCap> caps;

    friend bool operator==(const AccessPolicy&, const AccessPolicy&) = default;
};

struct Demand {
    double work = 0.0;
    double memory = 0.0;
};

struct AccessDecision {
    bool allowed = false;
    bool attack = false;
    std::string reason;
};

/// Deny by default. Attack-classified operations are always denied.
/// `policy` may be null (no policy: deny).
[[nodiscard]] AccessDecision authorize(const Certificate& cert, const AccessPolicy* policy, std::string_view op,
                                       const std::optional<Demand>& demand = std::nullopt);

enum class FilterAction { allow, deny };

struct Packet {
    std::string src;
    std::string dst;
    std::string msg_type;
};

/// Fields are shell-style globs ("*", "?", "[..]").
struct FilterRule {
    std::string src = "*";
    std::string dst = "*";
    std::string msg_type = "*";
    FilterAction action = FilterAction::allow;

    friend bool operator==(const FilterRule&, const FilterRule&) = default;
};

[[nodiscard]] bool glob_match(const std::string& pattern, const std::string& text);
[[nodiscard]] bool matches(const FilterRule& rule, const Packet& packet);
/// First matching rule wins; no match allows.
[[nodiscard]] FilterAction evaluate(const std::vector<FilterRule>& rules, const Packet& packet);

}  // namespace depsim
