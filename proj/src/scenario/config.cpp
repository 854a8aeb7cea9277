#include "depsim/scenario/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "depsim/resources/database.hpp"

namespace depsim {

std::string_view to_string(ActivityOp op) noexcept {
    switch (op) {
        case ActivityOp::job: return "job";
        case ActivityOp::dag: return "dag";
        case ActivityOp::transfer: return "transfer";
        case ActivityOp::db: return "db";
    }
    return "?";
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) {
        if (!out.empty()) out += "\n";
        out += "line " + std::to_string(d.line) + ": " + d.path + ": " + d.message;
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(sep, start);
        const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!piece.empty()) out.push_back(piece);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Shortest decimal text that reads back to the same double.
std::string real_text(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    std::string type;
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

std::vector<Section> tokenize(std::string_view text) {
    std::vector<Section> sections;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
            const auto words = split(line.substr(1, line.size() - 2), ' ');
            if (words.empty() || words.size() > 2) throw ParseError(line_no, "section header must be [type] or [type name]");
            sections.push_back(Section{words[0], words.size() == 2 ? words[1] : std::string(), line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
        if (sections.empty()) throw ParseError(line_no, "key outside of any section");
        Entry e{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), line_no};
        if (e.key.empty()) throw ParseError(line_no, "empty key");
        sections.back().entries.push_back(std::move(e));
    }
    return sections;
}

/// Typed access to one section's entries, collecting diagnostics.
class Reader {
public:
    Reader(Section& s, std::vector<Diagnostic>& diags) : s_(s), diags_(diags) {
        std::set<std::string> seen;
        for (const auto& e : s_.entries) {
            if (e.key != "rule" && !seen.insert(e.key).second) {
                error(e.key, e.line, "duplicate key");
            }
        }
    }

    [[nodiscard]] std::string path(const std::string& key) const {
        return s_.name.empty() ? s_.type + "." + key : s_.type + " " + s_.name + "." + key;
    }

    void error(const std::string& key, int line, const std::string& msg) { diags_.push_back({path(key), line, msg}); }

    Entry* find(const std::string& key) {
        for (auto& e : s_.entries) {
            if (e.key == key) {
                e.used = true;
                return &e;
            }
        }
        return nullptr;
    }

    [[nodiscard]] bool has(const std::string& key) const {
        return std::any_of(s_.entries.begin(), s_.entries.end(), [&](const Entry& e) { return e.key == key; });
    }

    std::optional<double> real(const std::string& key) {
        Entry* e = find(key);
        if (e == nullptr) return std::nullopt;
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(e->value.c_str(), &end);
        if (e->value.empty() || *end != '\0' || errno == ERANGE || std::isnan(v)) {
            error(key, e->line, "not a number: '" + e->value + "'");
            return std::nullopt;
        }
        return v;
    }

    void real(const std::string& key, double& out) {
        if (auto v = real(key)) out = *v;
    }

    std::optional<long long> integer(const std::string& key) {
        Entry* e = find(key);
        if (e == nullptr) return std::nullopt;
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(e->value.c_str(), &end, 10);
        if (e->value.empty() || *end != '\0' || errno == ERANGE) {
            error(key, e->line, "not an integer: '" + e->value + "'");
            return std::nullopt;
        }
        return v;
    }

    void integer(const std::string& key, int& out) {
        if (auto v = integer(key)) out = static_cast<int>(*v);
    }

    void boolean(const std::string& key, bool& out) {
        Entry* e = find(key);
        if (e == nullptr) return;
        if (e->value == "true") {
            out = true;
        } else if (e->value == "false") {
            out = false;
        } else {
            error(key, e->line, "expected true or false");
        }
    }

    void text(const std::string& key, std::string& out) {
        if (Entry* e = find(key)) out = e->value;
    }

    void list(const std::string& key, std::vector<std::string>& out) {
        if (Entry* e = find(key)) out = split(e->value, ',');
    }

    template <typename T>
    void parsed(const std::string& key, T& out, const std::function<T(std::string_view)>& parse) {
        Entry* e = find(key);
        if (e == nullptr) return;
        try {
            out = parse(e->value);
        } catch (const std::exception& ex) {
            error(key, e->line, ex.what());
        }
    }

    void family(const std::string& key, Family& out) {
        Entry* e = find(key);
        if (e == nullptr) return;
        if (auto f = parse_family(e->value)) {
            out = *f;
        } else {
            error(key, e->line, "unknown distribution '" + e->value + "'");
        }
    }

    std::vector<Entry*> with_prefix(const std::string& prefix) {
        std::vector<Entry*> out;
        for (auto& e : s_.entries) {
            if (e.key.rfind(prefix, 0) == 0) {
                e.used = true;
                out.push_back(&e);
            }
        }
        return out;
    }

    void finish() {
        for (const auto& e : s_.entries) {
            if (!e.used) error(e.key, e.line, "unknown key");
        }
    }

    [[nodiscard]] const std::string& name() const { return s_.name; }
    [[nodiscard]] int line() const { return s_.line; }

private:
    Section& s_;
    std::vector<Diagnostic>& diags_;
};

std::optional<ServerConfig> read_server(Reader& r, const std::string& prefix) {
    bool present = false;
    r.boolean(prefix, present);
    ServerConfig s;
    if (r.has(prefix + ".latency_s") || r.has(prefix + ".throughput_Bps")) present = true;
    r.real(prefix + ".latency_s", s.latency_s);
    r.real(prefix + ".throughput_Bps", s.throughput_Bps);
    if (!present) return std::nullopt;
    return s;
}

CheckpointMode parse_checkpoint_mode(std::string_view s) {
    if (s == "none") return CheckpointMode::none;
    if (s == "periodic") return CheckpointMode::periodic;
    if (s == "notification") return CheckpointMode::on_notification;
    throw std::invalid_argument("unknown checkpoint mode: " + std::string(s));
}

std::string_view checkpoint_text(CheckpointMode m) {
    switch (m) {
        case CheckpointMode::none: return "none";
        case CheckpointMode::periodic: return "periodic";
        case CheckpointMode::on_notification: return "notification";
    }
    return "none";
}

FilterRuleConfig parse_rule(std::string_view text) {
    const auto words = split(text, ' ');
    if (words.empty()) throw std::invalid_argument("empty filter rule");
    FilterRuleConfig rc;
    if (words[0] == "allow") {
        rc.rule.action = FilterAction::allow;
    } else if (words[0] == "deny") {
        rc.rule.action = FilterAction::deny;
    } else {
        throw std::invalid_argument("filter rule must start with allow or deny");
    }
    for (std::size_t i = 1; i < words.size(); ++i) {
        const auto eq = words[i].find('=');
        if (eq == std::string::npos) throw std::invalid_argument("bad filter field '" + words[i] + "'");
        const auto k = words[i].substr(0, eq);
        const auto v = words[i].substr(eq + 1);
        if (k == "src") {
            rc.rule.src = v;
        } else if (k == "dst") {
            rc.rule.dst = v;
        } else if (k == "type") {
            rc.rule.msg_type = v;
        } else if (k == "at") {
            char* end = nullptr;
            rc.at_s = std::strtod(v.c_str(), &end);
            if (v.empty() || *end != '\0') throw std::invalid_argument("bad rule time '" + v + "'");
        } else {
            throw std::invalid_argument("unknown filter field '" + k + "'");
        }
    }
    return rc;
}

std::string rule_text(const FilterRuleConfig& rc) {
    std::string s = rc.rule.action == FilterAction::allow ? "allow" : "deny";
    s += " src=" + rc.rule.src + " dst=" + rc.rule.dst + " type=" + rc.rule.msg_type;
    if (rc.at_s) s += " at=" + real_text(*rc.at_s);
    return s;
}

ActivityOp parse_activity_op(std::string_view op, std::string& db_op) {
    if (op == "job") return ActivityOp::job;
    if (op == "dag") return ActivityOp::dag;
    if (op == "transfer") return ActivityOp::transfer;
    if (DatabaseService::is_known_op(op)) {
        db_op = std::string(op);
        return ActivityOp::db;
    }
    throw std::invalid_argument("unknown activity op: " + std::string(op));
}

void read_engine(Reader& r, EngineConfig& e) {
    if (auto seed = r.integer("seed")) {
        if (*seed < 0) {
            r.error("seed", r.line(), "seed must be >= 0");
        } else {
            e.seed = static_cast<std::uint64_t>(*seed);
        }
    }
    r.real("horizon_s", e.horizon_s);
    r.boolean("byzantine_storm", e.byzantine_storm);
    r.real("storm_rate", e.storm_rate);
    r.integer("network_max_retries", e.network_max_retries);
    r.real("metric_window_s", e.metric_window_s);
    r.parsed<PlanPolicy>("policy", e.policy, parse_plan_policy);
    r.boolean("reschedule", e.reschedule);
    r.integer("job_max_retries", e.job_max_retries);
    r.real("checkpoint_cost_s", e.checkpoint_cost_s);
    if (auto t = r.real("transfer_timeout_s")) e.transfer_timeout_s = *t;
    r.boolean("trace", e.trace);
}

void read_security(Reader& r, SecuritySection& s) {
    s.line = r.line();
    r.list("trust", s.trust);
    if (Entry* e = r.find("auth")) {
        if (e->value == "none") {
            s.auth.reset();
        } else {
            try {
                s.auth = parse_auth_mode(e->value);
            } catch (const std::exception& ex) {
                r.error("auth", e->line, ex.what());
            }
        }
    }
    r.real("handshake_cost_s", s.costs.handshake_cost_s);
    r.real("cipher_overhead", s.costs.cipher_overhead);
    r.real("cpu_per_byte_s", s.costs.cpu_per_byte_s);
}

void read_center(Reader& r, CenterConfig& c) {
    r.real("lan.capacity_bps", c.lan_capacity_bps);
    r.real("lan.latency_s", c.lan_latency_s);
    r.integer("pu.count", c.pus);
    r.real("pu.power_wups", c.pu_power_wups);
    r.integer("pu.slots", c.pu_slots);
    c.db = read_server(r, "db");
    c.storage = read_server(r, "storage");
}

void read_fault(Reader& r, FaultConfig& f) {
    r.parsed<FaultType>("type", f.type, parse_fault_type);
    r.real("mttf_s", f.mttf_s);
    r.family("ttf_distribution", f.ttf_family);
    if (auto v = r.real("mttr_s")) f.mttr_s = *v;
    r.family("repair_distribution", f.repair_family);
    r.boolean("permanent", f.permanent);
    r.real("loss_fraction", f.loss_fraction);
    r.real("delay_s", f.delay_s);
    r.family("delay_distribution", f.delay_family);
    if (auto v = r.real("at_s")) f.at_s = *v;
}

void read_cert(Reader& r, CertConfig& c) {
    c.subject = r.name();
    r.text("subject", c.subject);
    r.text("issuer", c.issuer);
    r.real("not_before_s", c.not_before_s);
    r.real("not_after_s", c.not_after_s);
    r.list("vos", c.vos);
    r.boolean("revoked", c.revoked);
}

void read_policy(Reader& r, AccessPolicy& p) {
    for (Entry* e : r.with_prefix("grant.")) {
        try {
            p.grants[e->key.substr(6)] = parse_permissions(e->value);
        } catch (const std::exception& ex) {
            r.error(e->key, e->line, ex.what());
        }
    }
    std::vector<std::string> ops;
    r.list("attack_ops", ops);
    p.attack_ops.insert(ops.begin(), ops.end());
    for (Entry* e : r.with_prefix("cap.")) {
        const auto dot = e->key.rfind('.');
        const std::string vo = e->key.substr(4, dot - 4);
        const std::string field = e->key.substr(dot + 1);
        char* end = nullptr;
        const double v = std::strtod(e->value.c_str(), &end);
        if (e->value.empty() || *end != '\0') {
            r.error(e->key, e->line, "not a number: '" + e->value + "'");
        } else if (dot <= 4) {
            r.error(e->key, e->line, "unknown key");
        } else if (field == "max_work") {
            p.caps[vo].max_work = v;
        } else if (field == "max_memory") {
            p.caps[vo].max_memory = v;
        } else {
            r.error(e->key, e->line, "unknown key");
        }
    }
}

std::string edge_text(const DagEdge& e) { return e.parent + ">" + e.child + ":" + real_text(e.bytes); }

void read_dag(Reader& r, Dag& dag) {
    auto number = [&](const std::string& key, int line, const std::string& s, double& out) {
        char* end = nullptr;
        out = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0') {
            r.error(key, line, "not a number: '" + s + "'");
            return false;
        }
        return true;
    };
    if (Entry* e = r.find("tasks")) {
        for (const auto& item : split(e->value, ',')) {
            const auto colon = item.find(':');
            DagTask t{trim(item.substr(0, colon)), 1.0};
            if (colon != std::string::npos && !number("tasks", e->line, trim(item.substr(colon + 1)), t.work)) continue;
            dag.tasks.push_back(t);
        }
    }
    if (Entry* e = r.find("edges")) {
        for (const auto& item : split(e->value, ',')) {
            const auto gt = item.find('>');
            if (gt == std::string::npos) {
                r.error("edges", e->line, "edge must be parent>child[:bytes]");
                continue;
            }
            const auto colon = item.find(':', gt);
            DagEdge edge{trim(item.substr(0, gt)), trim(item.substr(gt + 1, colon == std::string::npos ? colon : colon - gt - 1)),
                         0.0};
            if (colon != std::string::npos && !number("edges", e->line, trim(item.substr(colon + 1)), edge.bytes)) continue;
            dag.edges.push_back(edge);
        }
    }
}

void read_activity(Reader& r, ActivityConfig& a, bool& has_end) {
    r.parsed<ArrivalKind>("arrival", a.pattern.kind, parse_arrival_kind);
    r.real("rate", a.pattern.rate);
    if (auto c = r.integer("count")) a.pattern.count = *c;
    else if (a.pattern.kind != ArrivalKind::batch) a.pattern.count = -1;
    r.real("start_s", a.pattern.start);
    has_end = r.has("end_s");
    r.real("end_s", a.pattern.end);
    if (Entry* e = r.find("op")) {
        try {
            a.what = parse_activity_op(e->value, a.db_op);
        } catch (const std::exception& ex) {
            r.error("op", e->line, ex.what());
        }
    }
    r.text("src", a.src);
    r.list("sources", a.sources);
    r.text("target", a.target);
    r.real("bytes", a.bytes);
    r.text("center", a.center);
    r.real("work", a.work);
    if (auto t = r.real("timeout_s")) a.timeout_s = *t;
    r.text("vo", a.vo);
    r.real("memory", a.memory);
    r.text("credential", a.credential);
    r.integer("replicas", a.replicas);
    r.parsed<CheckpointMode>("checkpoint", a.checkpoint.mode, parse_checkpoint_mode);
    r.real("checkpoint_interval_s", a.checkpoint.interval);
    r.text("dag", a.dag);
}

void check(std::vector<Diagnostic>& d, bool ok, std::string path, int line, std::string msg) {
    if (!ok) d.push_back({std::move(path), line, std::move(msg)});
}

std::vector<Diagnostic> diagnose(const ScenarioConfig& c) {
    std::vector<Diagnostic> d;
    const auto comps = c.components();
    auto exists = [&](const std::string& id) { return comps.contains(id); };
    auto kind_of = [&](const std::string& id) { return comps.at(id).first; };

    const auto& e = c.engine;
    check(d, e.horizon_s > 0.0 && std::isfinite(e.horizon_s), "engine.horizon_s", 0, "must be finite and > 0");
    check(d, e.metric_window_s > 0.0, "engine.metric_window_s", 0, "must be > 0");
    check(d, e.storm_rate > 0.0, "engine.storm_rate", 0, "must be > 0");
    check(d, e.checkpoint_cost_s >= 0.0, "engine.checkpoint_cost_s", 0, "must be >= 0");
    check(d, !e.transfer_timeout_s || *e.transfer_timeout_s > 0.0, "engine.transfer_timeout_s", 0, "must be > 0");

    if (c.security) {
        const auto& s = *c.security;
        check(d, s.costs.cipher_overhead >= 1.0, "security.cipher_overhead", s.line, "must be >= 1");
        check(d, s.costs.handshake_cost_s >= 0.0, "security.handshake_cost_s", s.line, "must be >= 0");
        check(d, s.costs.cpu_per_byte_s >= 0.0, "security.cpu_per_byte_s", s.line, "must be >= 0");
    }

    std::set<std::string> names;
    for (const auto& x : c.centers) {
        const std::string p = "center " + x.name;
        check(d, names.insert(x.name).second, p, x.line, "duplicate component name");
        check(d, x.lan_capacity_bps > 0.0, p + ".lan.capacity_bps", x.line, "must be > 0");
        check(d, x.lan_latency_s >= 0.0, p + ".lan.latency_s", x.line, "must be >= 0");
        check(d, x.pus >= 0, p + ".pu.count", x.line, "must be >= 0");
        check(d, x.pu_power_wups > 0.0, p + ".pu.power_wups", x.line, "must be > 0");
        check(d, x.pu_slots >= 1, p + ".pu.slots", x.line, "must be >= 1");
        for (const auto& [tag, srv] : {std::pair{"db", x.db}, std::pair{"storage", x.storage}}) {
            if (!srv) continue;
            check(d, srv->latency_s >= 0.0, p + "." + tag + ".latency_s", x.line, "must be >= 0");
            check(d, srv->throughput_Bps > 0.0, p + "." + tag + ".throughput_Bps", x.line, "must be > 0");
        }
    }
    for (const auto& x : c.routers) {
        check(d, names.insert(x.name).second, "router " + x.name, x.line, "duplicate component name");
    }
    std::set<std::string> link_names;
    for (const auto& x : c.links) {
        const std::string p = "link " + x.name;
        check(d, link_names.insert(x.name).second && !names.contains(x.name), p, x.line, "duplicate component name");
        for (const auto& [key, end] : {std::pair{"a", x.a}, std::pair{"b", x.b}}) {
            const bool ok = exists(end) && (kind_of(end) == ComponentKind::center || kind_of(end) == ComponentKind::router);
            check(d, ok, p + "." + key, x.line, "'" + end + "' is not a center or router");
        }
        check(d, x.a != x.b, p + ".b", x.line, "link endpoints must differ");
        check(d, x.capacity_bps > 0.0, p + ".capacity_bps", x.line, "must be > 0");
        check(d, x.latency_s >= 0.0, p + ".latency_s", x.line, "must be >= 0");
    }

    std::set<std::string> vo_names;
    for (const auto& v : c.vos) {
        const std::string p = "vo " + v.name;
        check(d, vo_names.insert(v.name).second, p, v.line, "duplicate VO");
        for (const auto& m : v.members) check(d, exists(m), p + ".members", v.line, "unknown component '" + m + "'");
    }
    std::set<std::string> cert_names;
    for (const auto& x : c.certs) {
        const std::string p = "cert " + x.name;
        check(d, cert_names.insert(x.name).second, p, x.line, "duplicate certificate");
        check(d, !x.subject.empty(), p + ".subject", x.line, "must not be empty");
        check(d, !x.issuer.empty(), p + ".issuer", x.line, "must not be empty");
        check(d, x.not_before_s <= x.not_after_s, p + ".not_after_s", x.line, "must not precede not_before_s");
        for (const auto& v : x.vos) check(d, vo_names.contains(v), p + ".vos", x.line, "unknown VO '" + v + "'");
    }
    std::set<std::string> policy_names;
    for (const auto& x : c.policies) {
        const std::string p = "policy " + x.policy.resource;
        check(d, policy_names.insert(x.policy.resource).second, p, x.line, "duplicate policy");
        check(d, exists(x.policy.resource), p, x.line, "unknown resource");
        for (const auto& [vo, perms] : x.policy.grants) {
            check(d, vo_names.contains(vo), p + ".grant." + vo, x.line, "unknown VO");
        }
        for (const auto& [vo, cap] : x.policy.caps) {
            check(d, vo_names.contains(vo), p + ".cap." + vo, x.line, "unknown VO");
        }
        for (const auto& op : x.policy.attack_ops) {
            check(d, required_permission(op) != perm_none || DatabaseService::is_known_op(op), p + ".attack_ops",
                  x.line, "unknown operation '" + op + "'");
        }
    }
    std::set<std::string> filter_names;
    for (const auto& x : c.filters) {
        const std::string p = "filter " + x.component;
        check(d, filter_names.insert(x.component).second, p, x.line, "duplicate filter section");
        check(d, exists(x.component), p, x.line, "unknown component");
        for (const auto& r : x.rules) check(d, !r.at_s || *r.at_s >= 0.0, p + ".rule", x.line, "time must be >= 0");
    }
    std::set<std::string> dag_names;
    for (const auto& x : c.dags) {
        const std::string p = "dag " + x.dag.id;
        check(d, dag_names.insert(x.dag.id).second, p, x.line, "duplicate DAG");
        check(d, !x.dag.tasks.empty(), p + ".tasks", x.line, "must list at least one task");
        for (const auto& t : x.dag.tasks) check(d, t.work >= 0.0, p + ".tasks", x.line, "task work must be >= 0");
        for (const auto& ed : x.dag.edges) check(d, ed.bytes >= 0.0, p + ".edges", x.line, "edge bytes must be >= 0");
        try {
            validate(x.dag);
        } catch (const std::exception& ex) {
            d.push_back({p, x.line, ex.what()});
        }
    }
    for (const auto& f : c.faults) {
        const std::string p = "fault " + f.component;
        if (!exists(f.component)) {
            d.push_back({p, f.line, "unknown component"});
            continue;
        }
        try {
            validate(to_profile(f), kind_of(f.component));
        } catch (const std::exception& ex) {
            d.push_back({p, f.line, ex.what()});
        }
    }
    std::set<std::string> act_names;
    for (const auto& a : c.activities) {
        const std::string p = "activity " + a.name;
        check(d, act_names.insert(a.name).second, p, a.line, "duplicate activity");
        try {
            validate(a.pattern);
        } catch (const std::exception& ex) {
            d.push_back({p, a.line, ex.what()});
        }
        const bool dos = a.pattern.kind == ArrivalKind::dos_attack;
        if (dos) {
            check(d, !a.sources.empty(), p + ".sources", a.line, "a dos-attack needs sources");
            check(d, a.what == ActivityOp::db || a.what == ActivityOp::transfer, p + ".op", a.line,
                  "a dos-attack issues transfers or database operations");
        }
        for (const auto& s : a.sources) check(d, exists(s), p + ".sources", a.line, "unknown component '" + s + "'");
        check(d, a.center.empty() || (exists(a.center) && kind_of(a.center) == ComponentKind::center), p + ".center",
              a.line, "unknown center '" + a.center + "'");
        check(d, a.vo.empty() || vo_names.contains(a.vo), p + ".vo", a.line, "unknown VO '" + a.vo + "'");
        check(d, a.credential.empty() || cert_names.contains(a.credential), p + ".credential", a.line,
              "unknown certificate '" + a.credential + "'");
        check(d, a.bytes >= 0.0, p + ".bytes", a.line, "must be >= 0");
        check(d, a.work >= 0.0, p + ".work", a.line, "must be >= 0");
        check(d, a.memory >= 0.0, p + ".memory", a.line, "must be >= 0");
        check(d, !a.timeout_s || *a.timeout_s > 0.0, p + ".timeout_s", a.line, "must be > 0");
        check(d, a.replicas >= 1, p + ".replicas", a.line, "must be >= 1");
        check(d, a.checkpoint.mode != CheckpointMode::periodic || a.checkpoint.interval > 0.0,
              p + ".checkpoint_interval_s", a.line, "periodic checkpoints need an interval > 0");
        switch (a.what) {
            case ActivityOp::job: break;
            case ActivityOp::dag:
                check(d, dag_names.contains(a.dag), p + ".dag", a.line, "unknown DAG '" + a.dag + "'");
                break;
            case ActivityOp::transfer:
            case ActivityOp::db:
                if (!dos) check(d, exists(a.src), p + ".src", a.line, "unknown component '" + a.src + "'");
                check(d, exists(a.target), p + ".target", a.line, "unknown component '" + a.target + "'");
                if (a.what == ActivityOp::db && exists(a.target)) {
                    const auto k = kind_of(a.target);
                    check(d, k == ComponentKind::database || k == ComponentKind::storage, p + ".target", a.line,
                          "'" + a.target + "' is not a database or storage server");
                }
                break;
        }
    }
    return d;
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::map<std::string, std::pair<ComponentKind, std::string>> ScenarioConfig::components() const {
    std::map<std::string, std::pair<ComponentKind, std::string>> out;
    for (const auto& c : centers) {
        out[c.name] = {ComponentKind::center, c.name};
        out[c.name + ".lan"] = {ComponentKind::link, c.name};
        for (int i = 0; i < c.pus; ++i) out[c.name + ".pu" + std::to_string(i)] = {ComponentKind::processing_unit, c.name};
        if (c.db) out[c.name + ".db"] = {ComponentKind::database, c.name};
        if (c.storage) out[c.name + ".storage"] = {ComponentKind::storage, c.name};
    }
    for (const auto& r : routers) out[r.name] = {ComponentKind::router, ""};
    for (const auto& l : links) out[l.name] = {ComponentKind::link, ""};
    out["scheduler"] = {ComponentKind::scheduler, ""};
    return out;
}

FaultProfile to_profile(const FaultConfig& f) {
    FaultProfile p;
    p.component = f.component;
    p.time_to_failure = Distribution::with_mean(f.ttf_family, f.mttf_s);
    p.kind.type = f.type;
    p.kind.loss_fraction = f.loss_fraction;
    if (f.type == FaultType::timing) {
        p.kind.extra_delay = Distribution::with_mean(f.delay_family, f.delay_s);
    }
    p.permanent = f.permanent;
    if (f.mttr_s) p.time_to_repair = Distribution::with_mean(f.repair_family, *f.mttr_s);
    p.first_at = f.at_s;
    return p;
}

void validate(const ScenarioConfig& config) {
    auto d = diagnose(config);
    if (!d.empty()) throw ValidationError(std::move(d));
}

ScenarioConfig parse_scenario(std::string_view text, const std::string& name) {
    auto sections = tokenize(text);
    ScenarioConfig c;
    c.name = name;
    std::vector<Diagnostic> diags;
    std::vector<std::pair<std::size_t, bool>> activity_end;
    bool seen_engine = false;
    for (auto& s : sections) {
        Reader r(s, diags);
        const bool named = !s.name.empty();
        auto need_name = [&](bool want) {
            if (named != want) {
                diags.push_back({s.type, s.line, want ? "section needs a name" : "section takes no name"});
            }
        };
        if (s.type == "engine") {
            need_name(false);
            if (seen_engine) diags.push_back({"engine", s.line, "duplicate section"});
            seen_engine = true;
            read_engine(r, c.engine);
        } else if (s.type == "security") {
            need_name(false);
            if (c.security) diags.push_back({"security", s.line, "duplicate section"});
            c.security.emplace();
            read_security(r, *c.security);
        } else if (s.type == "center") {
            need_name(true);
            CenterConfig x;
            x.name = s.name;
            x.line = s.line;
            read_center(r, x);
            c.centers.push_back(std::move(x));
        } else if (s.type == "router") {
            need_name(true);
            c.routers.push_back(RouterConfig{s.name, s.line});
        } else if (s.type == "link") {
            need_name(true);
            LinkConfig x;
            x.name = s.name;
            x.line = s.line;
            r.text("a", x.a);
            r.text("b", x.b);
            r.real("capacity_bps", x.capacity_bps);
            r.real("latency_s", x.latency_s);
            c.links.push_back(std::move(x));
        } else if (s.type == "fault") {
            need_name(true);
            FaultConfig x;
            x.component = s.name;
            x.line = s.line;
            read_fault(r, x);
            c.faults.push_back(std::move(x));
        } else if (s.type == "vo") {
            need_name(true);
            VoConfig x{s.name, {}, s.line};
            r.list("members", x.members);
            c.vos.push_back(std::move(x));
        } else if (s.type == "cert") {
            need_name(true);
            CertConfig x;
            x.name = s.name;
            x.line = s.line;
            read_cert(r, x);
            c.certs.push_back(std::move(x));
        } else if (s.type == "policy") {
            need_name(true);
            PolicyConfig x;
            x.policy.resource = s.name;
            x.line = s.line;
            read_policy(r, x.policy);
            c.policies.push_back(std::move(x));
        } else if (s.type == "filter") {
            need_name(true);
            FilterConfig x;
            x.component = s.name;
            x.line = s.line;
            for (Entry* e : r.with_prefix("rule")) {
                if (e->key != "rule") {
                    e->used = false;
                    continue;
                }
                try {
                    x.rules.push_back(parse_rule(e->value));
                } catch (const std::exception& ex) {
                    r.error("rule", e->line, ex.what());
                }
            }
            c.filters.push_back(std::move(x));
        } else if (s.type == "dag") {
            need_name(true);
            DagConfig x;
            x.dag.id = s.name;
            x.line = s.line;
            read_dag(r, x.dag);
            c.dags.push_back(std::move(x));
        } else if (s.type == "activity") {
            need_name(true);
            ActivityConfig x;
            x.name = s.name;
            x.line = s.line;
            bool has_end = false;
            read_activity(r, x, has_end);
            activity_end.emplace_back(c.activities.size(), has_end);
            c.activities.push_back(std::move(x));
        } else {
            diags.push_back({s.type, s.line, "unknown section type '" + s.type + "'"});
            for (auto& e : s.entries) e.used = true;
        }
        r.finish();
    }
    for (const auto& [i, has_end] : activity_end) {
        if (!has_end) c.activities[i].pattern.end = c.engine.horizon_s;
    }
    if (!diags.empty()) throw ValidationError(std::move(diags));
    validate(c);
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read scenario file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), std::filesystem::path(path).stem().string());
}

std::string write_scenario(const ScenarioConfig& c) {
    std::ostringstream o;
    auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
    auto real = [&](const std::string& k, double v) { kv(k, real_text(v)); };
    auto flag = [&](const std::string& k, bool v) { kv(k, v ? "true" : "false"); };
    auto joined = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
        return s;
    };

    const auto& e = c.engine;
    o << "[engine]\n";
    kv("seed", std::to_string(e.seed));
    real("horizon_s", e.horizon_s);
    flag("byzantine_storm", e.byzantine_storm);
    real("storm_rate", e.storm_rate);
    kv("network_max_retries", std::to_string(e.network_max_retries));
    real("metric_window_s", e.metric_window_s);
    kv("policy", std::string(to_string(e.policy)));
    flag("reschedule", e.reschedule);
    kv("job_max_retries", std::to_string(e.job_max_retries));
    real("checkpoint_cost_s", e.checkpoint_cost_s);
    if (e.transfer_timeout_s) real("transfer_timeout_s", *e.transfer_timeout_s);
    flag("trace", e.trace);

    if (c.security) {
        const auto& s = *c.security;
        o << "\n[security]\n";
        if (!s.trust.empty()) kv("trust", joined(s.trust));
        kv("auth", s.auth ? std::string(to_string(*s.auth)) : "none");
        real("handshake_cost_s", s.costs.handshake_cost_s);
        real("cipher_overhead", s.costs.cipher_overhead);
        real("cpu_per_byte_s", s.costs.cpu_per_byte_s);
    }
    for (const auto& x : c.centers) {
        o << "\n[center " << x.name << "]\n";
        real("lan.capacity_bps", x.lan_capacity_bps);
        real("lan.latency_s", x.lan_latency_s);
        kv("pu.count", std::to_string(x.pus));
        real("pu.power_wups", x.pu_power_wups);
        kv("pu.slots", std::to_string(x.pu_slots));
        for (const auto& [tag, srv] : {std::pair{std::string("db"), x.db}, std::pair{std::string("storage"), x.storage}}) {
            if (!srv) continue;
            flag(tag, true);
            real(tag + ".latency_s", srv->latency_s);
            real(tag + ".throughput_Bps", srv->throughput_Bps);
        }
    }
    for (const auto& x : c.routers) o << "\n[router " << x.name << "]\n";
    for (const auto& x : c.links) {
        o << "\n[link " << x.name << "]\n";
        kv("a", x.a);
        kv("b", x.b);
        real("capacity_bps", x.capacity_bps);
        real("latency_s", x.latency_s);
    }
    for (const auto& x : c.vos) {
        o << "\n[vo " << x.name << "]\n";
        if (!x.members.empty()) kv("members", joined(x.members));
    }
    for (const auto& x : c.certs) {
        o << "\n[cert " << x.name << "]\n";
        kv("subject", x.subject);
        kv("issuer", x.issuer);
        real("not_before_s", x.not_before_s);
        real("not_after_s", x.not_after_s);
        if (!x.vos.empty()) kv("vos", joined(x.vos));
        flag("revoked", x.revoked);
    }
    for (const auto& x : c.policies) {
        o << "\n[policy " << x.policy.resource << "]\n";
        for (const auto& [vo, perms] : x.policy.grants) kv("grant." + vo, format_permissions(perms));
        if (!x.policy.attack_ops.empty()) {
            kv("attack_ops", joined(std::vector<std::string>(x.policy.attack_ops.begin(), x.policy.attack_ops.end())));
        }
        for (const auto& [vo, cap] : x.policy.caps) {
            if (cap.max_work) real("cap." + vo + ".max_work", *cap.max_work);
            if (cap.max_memory) real("cap." + vo + ".max_memory", *cap.max_memory);
        }
    }
    for (const auto& x : c.filters) {
        o << "\n[filter " << x.component << "]\n";
        for (const auto& r : x.rules) kv("rule", rule_text(r));
    }
    for (const auto& x : c.dags) {
        o << "\n[dag " << x.dag.id << "]\n";
        std::vector<std::string> tasks, edges;
        for (const auto& t : x.dag.tasks) tasks.push_back(t.name + ":" + real_text(t.work));
        for (const auto& ed : x.dag.edges) edges.push_back(edge_text(ed));
        kv("tasks", joined(tasks));
        if (!edges.empty()) kv("edges", joined(edges));
    }
    for (const auto& f : c.faults) {
        o << "\n[fault " << f.component << "]\n";
        kv("type", std::string(to_string(f.type)));
        real("mttf_s", f.mttf_s);
        kv("ttf_distribution", std::string(to_string(f.ttf_family)));
        if (f.mttr_s) real("mttr_s", *f.mttr_s);
        kv("repair_distribution", std::string(to_string(f.repair_family)));
        flag("permanent", f.permanent);
        real("loss_fraction", f.loss_fraction);
        real("delay_s", f.delay_s);
        kv("delay_distribution", std::string(to_string(f.delay_family)));
        if (f.at_s) real("at_s", *f.at_s);
    }
    for (const auto& a : c.activities) {
        o << "\n[activity " << a.name << "]\n";
        kv("arrival", std::string(to_string(a.pattern.kind)));
        real("rate", a.pattern.rate);
        kv("count", std::to_string(a.pattern.count));
        real("start_s", a.pattern.start);
        real("end_s", a.pattern.end);
        kv("op", a.what == ActivityOp::db ? a.db_op : std::string(to_string(a.what)));
        if (!a.src.empty()) kv("src", a.src);
        if (!a.sources.empty()) kv("sources", joined(a.sources));
        if (!a.target.empty()) kv("target", a.target);
        real("bytes", a.bytes);
        if (!a.center.empty()) kv("center", a.center);
        real("work", a.work);
        if (a.timeout_s) real("timeout_s", *a.timeout_s);
        if (!a.vo.empty()) kv("vo", a.vo);
        real("memory", a.memory);
        if (!a.credential.empty()) kv("credential", a.credential);
        kv("replicas", std::to_string(a.replicas));
        kv("checkpoint", std::string(checkpoint_text(a.checkpoint.mode)));
        real("checkpoint_interval_s", a.checkpoint.interval);
        if (!a.dag.empty()) kv("dag", a.dag);
    }
    return o.str();
}

}  // namespace depsim
