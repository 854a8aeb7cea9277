#include "depsim/scenario/simulation.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace depsim {

namespace {

SchedulerConfig scheduler_config(const EngineConfig& e) {
    SchedulerConfig s;
    s.policy = e.policy;
    s.reschedule = e.reschedule;
    s.max_retries = e.job_max_retries;
    s.checkpoint_cost_s = e.checkpoint_cost_s;
    s.transfer_timeout_s = e.transfer_timeout_s;
    return s;
}

SecurityConfig security_costs(const ScenarioConfig& c) { return c.security ? c.security->costs : SecurityConfig{}; }

Dag find_dag(const ScenarioConfig& c, const std::string& id) {
    for (const auto& d : c.dags) {
        if (d.dag.id == id) return d.dag;
    }
    throw std::out_of_range("unknown DAG: " + id);
}

}  // namespace

std::string run_id(const ScenarioConfig& config) {
    return config.name + "-s" + std::to_string(config.engine.seed);
}

Simulation::Simulation(ScenarioConfig config)
    : config_(std::move(config)),
      engine_(config_.engine.seed),
      topology_(registry_),
      network_(engine_, topology_, registry_),
      compute_(engine_, registry_),
      databases_(registry_),
      monitor_(engine_),
      injector_(engine_, registry_, monitor_, *this),
      security_(engine_, topology_, metrics_, security_costs(config_)) {
    validate(config_);
    engine_.trace().set_enabled(config_.engine.trace);
    metrics_.set_window(config_.engine.metric_window_s);
    network_.set_max_retries(config_.engine.network_max_retries);
    anonymous_.subject = "anonymous";
    build_resources();
    build_security();
    scheduler_ = std::make_unique<Scheduler>(engine_, registry_, compute_, network_, topology_, monitor_, jobs_,
                                             scheduler_config(config_.engine));
    scheduler_->set_eligibility(
        [](const Job& job, const ProcessingUnit& pu) { return job.vo.empty() || job.vo == pu.vo; });
    scheduler_->on_finished([this](const Job& job) { job_finished(job); });
    for (const auto& f : config_.faults) injector_.attach_profile(to_profile(f));
    if (config_.engine.byzantine_storm) injector_.byzantine_storm(true, config_.engine.storm_rate);
    schedule_activities();
}

Simulation::~Simulation() = default;

void Simulation::build_resources() {
    auto first_vo = [this](const std::string& pu, const std::string& center) {
        for (const auto& vo : config_.vos) {
            for (const auto& m : vo.members) {
                if (m == pu || m == center) return vo.name;
            }
        }
        return std::string();
    };
    for (const auto& c : config_.centers) {
        topology_.add_center(c.name, c.lan_capacity_bps, c.lan_latency_s);
        for (int i = 0; i < c.pus; ++i) {
            const std::string id = c.name + ".pu" + std::to_string(i);
            topology_.attach(id, ComponentKind::processing_unit, c.name);
            compute_.add_pu(ProcessingUnit{id, c.name, c.pu_power_wups, c.pu_slots, first_vo(id, c.name)});
        }
        for (const auto& [suffix, server, kind] :
             {std::tuple{".db", c.db, ComponentKind::database}, std::tuple{".storage", c.storage, ComponentKind::storage}}) {
            if (!server) continue;
            const std::string id = c.name + suffix;
            topology_.attach(id, kind, c.name);
            databases_.add(DatabaseServer{id, c.name, server->latency_s, server->throughput_Bps,
                                          kind == ComponentKind::storage});
            if (kind == ComponentKind::database) db_of_center_[c.name] = id;
        }
    }
    for (const auto& r : config_.routers) topology_.add_router(r.name);
    for (const auto& l : config_.links) topology_.add_link(LinkSpec{l.name, l.a, l.b, l.capacity_bps, l.latency_s});
    registry_.add(std::string(Scheduler::kId), ComponentKind::scheduler);
}

void Simulation::build_security() {
    if (config_.security) {
        for (const auto& t : config_.security->trust) security_.trust(t);
    }
    for (const auto& vo : config_.vos) security_.vos().create(vo.name, vo.members);
    auto to_cert = [](const CertConfig& c) {
        return Certificate{c.subject, c.issuer, c.not_before_s, c.not_after_s,
                           std::set<std::string>(c.vos.begin(), c.vos.end()), c.revoked, ""};
    };
    // Component certificates first; a certificate named after a center then
    // covers every component of that center without its own.
    for (const auto& c : config_.certs) security_.issue(c.name, to_cert(c));
    for (const auto& c : config_.certs) {
        if (!registry_.contains(c.name) || registry_.info(c.name).kind != ComponentKind::center) continue;
        for (const auto& id : registry_.ids()) {
            const auto& info = registry_.info(id);
            if (id != c.name && info.center == c.name && security_.certificate_of(id) == nullptr) {
                security_.issue(id, to_cert(c));
            }
        }
    }
    for (const auto& p : config_.policies) security_.set_policy(p.policy);
    for (const auto& f : config_.filters) {
        for (const auto& r : f.rules) {
            if (!r.at_s || *r.at_s <= 0.0) {
                security_.add_rule(f.component, r.rule);
                continue;
            }
            const std::string component = f.component;
            const FilterRule rule = r.rule;
            engine_.schedule(*r.at_s, EventSpec{EventKind::user, "rule-add", "security", component, ""},
                             [this, component, rule] { security_.add_rule(component, rule); });
        }
    }
}

void Simulation::schedule_activities() {
    for (const auto& a : config_.activities) {
        if (a.pattern.kind == ArrivalKind::dos_attack) {
            AttackPattern p;
            p.name = a.name;
            p.sources = a.sources;
            p.target = a.target;
            p.rate = a.pattern.rate;
            p.start = a.pattern.start;
            p.end = a.pattern.end;
            p.op = a.what == ActivityOp::db ? a.db_op : "transfer";
            p.request_bytes = a.bytes;
            const ActivityConfig* act = &a;
            security_.launch_attack(p, [this, act, op = p.op](const std::string& src) {
                if (act->what == ActivityOp::db) {
                    db_request(*act, src, op, true);
                } else {
                    engine_.record("request", src, act->target, "activity=" + act->name + ";op=transfer;attack=1");
                    if (security_.admit(act->target, Packet{src, act->target, "transfer"}, act->bytes)) {
                        try {
                            network_.start_transfer(src, act->target, act->bytes);
                        } catch (const NoRoute&) {
                        }
                    }
                }
            });
            continue;
        }
        SeededRng rng = engine_.substream("activity:" + a.name);
        const auto times = arrival_times(a.pattern, rng);
        const ActivityConfig* act = &a;
        for (std::size_t i = 0; i < times.size(); ++i) {
            engine_.schedule(times[i], EventSpec{EventKind::user, "", "activity:" + a.name, "", ""},
                             [this, act, i] { arrive(*act, i); });
        }
    }
}

void Simulation::arrive(const ActivityConfig& a, std::size_t index) {
    switch (a.what) {
        case ActivityOp::job: submit_job(a, index); break;
        case ActivityOp::dag:
            scheduler_->submit_dag(find_dag(config_, a.dag), a.name + "-" + std::to_string(index), a.center,
                                   a.checkpoint);
            break;
        case ActivityOp::transfer:
            try {
                network_.start_transfer(a.src, a.target, a.bytes);
            } catch (const NoRoute&) {
                // counted as lost by the network
            }
            break;
        case ActivityOp::db: db_request(a, a.src, a.db_op, false); break;
    }
}

const Certificate& Simulation::credential_for(const std::string& credential, const std::string& component) {
    if (!credential.empty()) {
        if (const Certificate* c = security_.certificate_of(credential)) return *c;
    }
    if (const Certificate* c = security_.certificate_of(component)) return *c;
    return anonymous_;
}

void Simulation::submit_job(const ActivityConfig& a, std::size_t index) {
    Job job;
    job.id = a.name + "-" + std::to_string(index);
    job.work = a.work;
    job.output_size = a.bytes;
    job.timeout = a.timeout_s;
    job.vo = a.vo;
    job.credential = a.credential;
    job.memory = a.memory;
    job.center = a.center;
    if (!a.center.empty() && security_.policy(a.center) != nullptr) {
        const auto d = security_.authorize_op(credential_for(a.credential, ""), a.center, "submit",
                                              Demand{a.work, a.memory}, job.id);
        if (!d.allowed) return;
    }
    if (a.replicas > 1) {
        try {
            scheduler_->replicate(std::move(job), a.replicas);
        } catch (const NotEnoughPus&) {
            engine_.record("replicate-fail", std::string(Scheduler::kId), a.name + "-" + std::to_string(index),
                           "reason=not-enough-pus");
        }
        return;
    }
    scheduler_->submit_job(std::move(job), a.checkpoint);
}

void Simulation::db_request(const ActivityConfig& a, const std::string& src, const std::string& op, bool attack) {
    engine_.record("request", src, a.target,
                   "activity=" + a.name + ";op=" + op + ";attack=" + (attack ? "1" : "0"));
    if (!security_.admit(a.target, Packet{src, a.target, op}, a.bytes)) return;
    const auto auth = config_.security ? config_.security->auth : std::nullopt;
    if (!auth) {
        db_continue(a, src, op, a.bytes);
        return;
    }
    Session session;
    try {
        session = security_.authenticate(src, a.target, *auth);
    } catch (const AuthFailed&) {
        return;
    } catch (const NoRoute&) {
        engine_.record("auth-fail", src, a.target, "reason=no-route");
        return;
    }
    const double bytes = security_.protect_message(session.id, a.bytes).bytes;
    const ActivityConfig* act = &a;
    engine_.schedule(session.established_at, EventSpec{EventKind::user, "", src, a.target, "session"},
                     [this, act, src, op, bytes] { db_continue(*act, src, op, bytes); });
}

void Simulation::db_continue(const ActivityConfig& a, const std::string& src, const std::string& op, double bytes) {
    if (security_.policy(a.target) != nullptr) {
        const auto d = security_.authorize_op(credential_for(a.credential, src), a.target, op, std::nullopt, src);
        if (!d.allowed) return;
    }
    const std::string target = a.target;
    auto serve = [this, target, op, bytes, src](const Transfer& t) {
        if (t.status != TransferStatus::delivered) return;
        try {
            const auto r = databases_.serve(target, op, bytes);
            metrics_.add("db_ops", target);
            if (r.wrong_value) metrics_.add("db_wrong_values", target);
            engine_.record("db-op", target, src,
                           "op=" + op + ";delay=" + format_real(r.delay) + ";wrong=" + (r.wrong_value ? "1" : "0"));
        } catch (const ServerDown&) {
            engine_.record("db-fail", target, src, "op=" + op + ";reason=down");
        }
    };
    try {
        network_.start_transfer(src, target, bytes, serve);
    } catch (const NoRoute&) {
        // counted as lost by the network
    }
}

void Simulation::job_finished(const Job& job) {
    if (job.output_size <= 0.0 || job.center.empty()) return;
    auto it = db_of_center_.find(job.center);
    if (it == db_of_center_.end()) return;
    try {
        network_.start_transfer(job.pu, it->second, job.output_size);
    } catch (const NoRoute&) {
        // counted as lost by the network
    }
}

void Simulation::crash(const ComponentInfo& c, bool) {
    if (c.kind == ComponentKind::processing_unit) {
        scheduler_->pu_crashed(c.id, compute_.crash(c.id));
    } else {
        network_.component_down(c.id);
    }
}

void Simulation::recover(const ComponentInfo& c) {
    if (c.kind == ComponentKind::processing_unit) {
        scheduler_->pu_recovered(c.id);
    } else {
        network_.component_up(c.id);
    }
}

void Simulation::omission(const ComponentInfo& c, double loss_fraction) { network_.omission(c.id, loss_fraction); }

void Simulation::end_omission(const ComponentInfo& c) { network_.clear_omission(c.id); }

void Simulation::timing(const ComponentInfo& c, double extra_delay) {
    if (c.kind == ComponentKind::processing_unit) {
        compute_.delay(c.id, extra_delay);
    } else {
        network_.delay_flows(c.id, extra_delay);
    }
}

bool Simulation::byzantine(const ComponentInfo& c) {
    switch (c.kind) {
        case ComponentKind::processing_unit: return compute_.corrupt(c.id) > 0;
        case ComponentKind::link: network_.duplicate_next(c.id); return true;
        case ComponentKind::database:
        case ComponentKind::storage: databases_.corrupt_next(c.id); return true;
        case ComponentKind::scheduler: scheduler_->randomize_next_placement(); return true;
        default: return false;
    }
}

const RunReport& Simulation::run() {
    if (ran_) throw std::logic_error("a simulation runs once");
    ran_ = true;
    const double horizon = config_.engine.horizon_s;
    engine_.run_until(horizon);

    const auto& counters = scheduler_->counters();
    const auto& net = network_.stats();
    report_.run_id = run_id(config_);
    report_.seed = config_.engine.seed;
    report_.horizon = horizon;
    report_.submitted = counters.submitted;
    report_.finished = counters.finished;
    report_.failed = counters.failed;
    report_.rescheduled = counters.rescheduled;
    report_.lost_bytes = net.lost_bytes;
    report_.mean_transfer_time = net.mean_transfer_time();
    report_.attacks_detected = security_.attacks_detected();

    const std::string sched(Scheduler::kId);
    metrics_.add("jobs_submitted", sched, static_cast<double>(counters.submitted));
    metrics_.add("jobs_finished", sched, static_cast<double>(counters.finished));
    metrics_.add("jobs_failed", sched, static_cast<double>(counters.failed));
    metrics_.add("jobs_rescheduled", sched, static_cast<double>(counters.rescheduled));
    metrics_.add("requested_bytes", "network", net.requested_bytes);
    metrics_.add("delivered_bytes", "network", net.delivered_bytes);
    metrics_.add("lost_bytes", "network", net.lost_bytes);
    return report_;
}

std::string metrics_csv(const MetricsStore& metrics, const RunReport& report) {
    std::ostringstream o;
    o << "run_id,seed,time,metric,component,value\n";
    for (const auto& r : metrics.rows(report.horizon)) {
        o << report.run_id << ',' << report.seed << ',' << format_real(r.time) << ',' << r.metric << ','
          << r.component << ',' << format_real(r.value) << '\n';
    }
    return o.str();
}

std::string report_header() {
    return "run_id,seed,horizon,submitted,finished,failed,rescheduled,lost_bytes,mean_transfer_time,"
           "attacks_detected\n";
}

std::string report_row(const RunReport& r) {
    std::ostringstream o;
    o << r.run_id << ',' << r.seed << ',' << format_real(r.horizon) << ',' << r.submitted << ',' << r.finished
      << ',' << r.failed << ',' << r.rescheduled << ',' << format_real(r.lost_bytes) << ','
      << format_real(r.mean_transfer_time) << ',' << r.attacks_detected << '\n';
    return o.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing " + path);
}

void export_run(const Simulation& sim, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    const std::filesystem::path base(dir);
    write_file((base / "metrics.csv").string(), metrics_csv(sim.metrics(), sim.report()));
    write_file((base / "report.csv").string(), report_header() + report_row(sim.report()));
    write_file((base / "trace.csv").string(), sim.engine().trace().to_csv());
}

}  // namespace depsim
