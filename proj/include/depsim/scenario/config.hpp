#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/dependsched/planner.hpp"
#include "depsim/dependsched/scheduler.hpp"
#include "depsim/engine/random.hpp"
#include "depsim/faults/faults.hpp"
#include "depsim/security/access.hpp"
#include "depsim/security/security.hpp"
#include "depsim/workload/activity.hpp"
#include "depsim/workload/dag.hpp"

namespace depsim {

struct ServerConfig {
    double latency_s = 0.001;
    double throughput_Bps = 1e8;

    friend bool operator==(const ServerConfig&, const ServerConfig&) = default;
};

/// A regional center with homogeneous PUs `<name>.pu<i>`, an optional
/// database server `<name>.db` and mass storage `<name>.storage`.
struct CenterConfig {
    std::string name;
    double lan_capacity_bps = 1e10;
    double lan_latency_s = 0.0;
    int pus = 1;
    double pu_power_wups = 1.0;
    int pu_slots = 1;
    std::optional<ServerConfig> db;
    std::optional<ServerConfig> storage;
    int line = 0;

    friend bool operator==(const CenterConfig& a, const CenterConfig& b) {
        return a.name == b.name && a.lan_capacity_bps == b.lan_capacity_bps && a.lan_latency_s == b.lan_latency_s &&
               a.pus == b.pus && a.pu_power_wups == b.pu_power_wups && a.pu_slots == b.pu_slots && a.db == b.db &&
               a.storage == b.storage;
    }
};

struct RouterConfig {
    std::string name;
    int line = 0;

    friend bool operator==(const RouterConfig& a, const RouterConfig& b) { return a.name == b.name; }
};

struct LinkConfig {
    std::string name;
    std::string a;
    std::string b;
    double capacity_bps = 1e9;
    double latency_s = 0.0;
    int line = 0;

    friend bool operator==(const LinkConfig& x, const LinkConfig& y) {
        return x.name == y.name && x.a == y.a && x.b == y.b && x.capacity_bps == y.capacity_bps &&
               x.latency_s == y.latency_s;
    }
};

struct FaultConfig {
    std::string component;
    FaultType type = FaultType::crash;
    double mttf_s = 1000.0;
    Family ttf_family = Family::exponential;
    std::optional<double> mttr_s;
    Family repair_family = Family::exponential;
    bool permanent = false;
    double loss_fraction = 0.0;
    double delay_s = 0.0;
    Family delay_family = Family::exponential;
    std::optional<double> at_s;
    int line = 0;

    friend bool operator==(const FaultConfig& a, const FaultConfig& b) {
        return a.component == b.component && a.type == b.type && a.mttf_s == b.mttf_s &&
               a.ttf_family == b.ttf_family && a.mttr_s == b.mttr_s && a.repair_family == b.repair_family &&
               a.permanent == b.permanent && a.loss_fraction == b.loss_fraction && a.delay_s == b.delay_s &&
               a.delay_family == b.delay_family && a.at_s == b.at_s;
    }
};

struct VoConfig {
    std::string name;
    std::vector<std::string> members;
    int line = 0;

    friend bool operator==(const VoConfig& a, const VoConfig& b) { return a.name == b.name && a.members == b.members; }
};

/// Named certificate. When the name is a component id it is that
/// component's identity; activities may also present it as a credential.
struct CertConfig {
    std::string name;
    std::string subject;
    std::string issuer;
    double not_before_s = 0.0;
    double not_after_s = 1e300;
    std::vector<std::string> vos;
    bool revoked = false;
    int line = 0;

    friend bool operator==(const CertConfig& a, const CertConfig& b) {
        return a.name == b.name && a.subject == b.subject && a.issuer == b.issuer &&
               a.not_before_s == b.not_before_s && a.not_after_s == b.not_after_s && a.vos == b.vos &&
               a.revoked == b.revoked;
    }
};

struct PolicyConfig {
    AccessPolicy policy;
    int line = 0;

    friend bool operator==(const PolicyConfig& a, const PolicyConfig& b) { return a.policy == b.policy; }
};

struct FilterRuleConfig {
    FilterRule rule;
    /// Rule installed at this simulated time instead of at start.
    std::optional<double> at_s;

    friend bool operator==(const FilterRuleConfig&, const FilterRuleConfig&) = default;
};

struct FilterConfig {
    std::string component;
    std::vector<FilterRuleConfig> rules;
    int line = 0;

    friend bool operator==(const FilterConfig& a, const FilterConfig& b) {
        return a.component == b.component && a.rules == b.rules;
    }
};

struct DagConfig {
    Dag dag;
    int line = 0;

    friend bool operator==(const DagConfig& a, const DagConfig& b) {
        if (a.dag.id != b.dag.id || a.dag.tasks.size() != b.dag.tasks.size() ||
            a.dag.edges.size() != b.dag.edges.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.dag.tasks.size(); ++i) {
            if (a.dag.tasks[i].name != b.dag.tasks[i].name || a.dag.tasks[i].work != b.dag.tasks[i].work) return false;
        }
        for (std::size_t i = 0; i < a.dag.edges.size(); ++i) {
            const auto& x = a.dag.edges[i];
            const auto& y = b.dag.edges[i];
            if (x.parent != y.parent || x.child != y.child || x.bytes != y.bytes) return false;
        }
        return true;
    }
};

enum class ActivityOp { job, dag, transfer, db };

std::string_view to_string(ActivityOp op) noexcept;

/// A stream of arrivals. Each arrival submits a job, a DAG instance, a
/// plain transfer, or a database operation (`op` names the operation).
struct ActivityConfig {
    std::string name;
    ArrivalPattern pattern;
    ActivityOp what = ActivityOp::job;
    /// Database operation (read, write, create, query, get).
    std::string db_op;
    std::string src;
    std::vector<std::string> sources;
    std::string target;
    double bytes = 0.0;
    std::string center;
    double work = 1.0;
    std::optional<double> timeout_s;
    std::string vo;
    double memory = 0.0;
    std::string credential;
    int replicas = 1;
    CheckpointPolicy checkpoint;
    std::string dag;
    int line = 0;

    friend bool operator==(const ActivityConfig& a, const ActivityConfig& b) {
        return a.name == b.name && a.pattern == b.pattern && a.what == b.what && a.db_op == b.db_op &&
               a.src == b.src && a.sources == b.sources && a.target == b.target && a.bytes == b.bytes &&
               a.center == b.center && a.work == b.work && a.timeout_s == b.timeout_s && a.vo == b.vo &&
               a.memory == b.memory && a.credential == b.credential && a.replicas == b.replicas &&
               a.checkpoint == b.checkpoint && a.dag == b.dag;
    }
};

struct SecuritySection {
    std::vector<std::string> trust;
    std::optional<AuthMode> auth;
    SecurityConfig costs;
    int line = 0;

    friend bool operator==(const SecuritySection& a, const SecuritySection& b) {
        return a.trust == b.trust && a.auth == b.auth && a.costs.handshake_cost_s == b.costs.handshake_cost_s &&
               a.costs.cipher_overhead == b.costs.cipher_overhead && a.costs.cpu_per_byte_s == b.costs.cpu_per_byte_s;
    }
};

struct EngineConfig {
    std::uint64_t seed = 42;
    double horizon_s = 1000.0;
    bool byzantine_storm = false;
    /// Storm events per 10^4 simulated seconds.
    double storm_rate = 1.0;
    /// Network retransmissions per transfer; negative means unlimited.
    int network_max_retries = 10;
    double metric_window_s = 1.0;
    PlanPolicy policy = PlanPolicy::baseline;
    bool reschedule = true;
    /// Reschedules per job; negative means unlimited.
    int job_max_retries = 3;
    double checkpoint_cost_s = 0.0;
    std::optional<double> transfer_timeout_s;
    bool trace = true;

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct ScenarioConfig {
    std::string name;
    EngineConfig engine;
    std::optional<SecuritySection> security;
    std::vector<CenterConfig> centers;
    std::vector<RouterConfig> routers;
    std::vector<LinkConfig> links;
    std::vector<VoConfig> vos;
    std::vector<CertConfig> certs;
    std::vector<PolicyConfig> policies;
    std::vector<FilterConfig> filters;
    std::vector<DagConfig> dags;
    std::vector<FaultConfig> faults;
    std::vector<ActivityConfig> activities;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

    /// Every component id the scenario defines, with its kind and center.
    [[nodiscard]] std::map<std::string, std::pair<ComponentKind, std::string>> components() const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

struct Diagnostic {
    /// Dotted path to the offending field, e.g. `center A.pu.powerr`.
    std::string path;
    int line = 0;
    std::string message;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<Diagnostic> diagnostics);
    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// Throws ParseError or ValidationError. `name` labels the scenario.
[[nodiscard]] ScenarioConfig parse_scenario(std::string_view text, const std::string& name = "scenario");
/// Reads the file; the scenario name is the file stem.
[[nodiscard]] ScenarioConfig load_scenario(const std::string& path);
/// Re-checks a config built in code. Throws ValidationError.
void validate(const ScenarioConfig& config);
/// Fault profile described by a fault section.
[[nodiscard]] FaultProfile to_profile(const FaultConfig& fault);

/// Canonical text form; parse_scenario(write_scenario(c)) == c.
[[nodiscard]] std::string write_scenario(const ScenarioConfig& config);

}  // namespace depsim
