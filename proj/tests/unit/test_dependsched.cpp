#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

#include "doctest.h"

#include "depsim/dependsched/planner.hpp"
#include "depsim/dependsched/scheduler.hpp"
#include "../support/topologies.hpp"

using namespace depsim;

namespace {

CommEstimator flat_comm(double seconds) {
    return [seconds](const std::string& a, const std::string& b, double) { return a == b ? 0.0 : seconds; };
}

// Replays a list of (task, pu) placements on single-slot PUs and returns the
// resulting start/finish times. Written independently of the planner.
std::map<std::string, Assignment> replay(const Dag& dag, const std::map<std::string, double>& power,
                                         const std::vector<std::pair<std::string, std::string>>& order,
                                         const CommEstimator& comm) {
    std::map<std::string, Assignment> out;
    std::map<std::string, double> free_at;
    for (const auto& [task, pu] : order) {
        double ready = free_at[pu];
        for (const auto& e : dag.edges) {
            if (e.child != task) continue;
            const auto& p = out.at(e.parent);
            ready = std::max(ready, p.finish + (p.pu == pu ? 0.0 : comm(p.pu, pu, e.bytes)));
        }
        const double finish = ready + dag.task(task).work / power.at(pu);
        out[task] = Assignment{pu, ready, finish};
        free_at[pu] = finish;
    }
    return out;
}

// Earliest-finish greedy rule re-derived by trying every (ready task, PU)
// extension of the placement so far.
std::map<std::string, Assignment> etf_oracle(const Dag& dag, const std::map<std::string, double>& power,
                                             const CommEstimator& comm) {
    std::vector<std::pair<std::string, std::string>> order;
    std::set<std::string> placed;
    std::vector<std::string> names;
    for (const auto& t : dag.tasks) names.push_back(t.name);
    std::sort(names.begin(), names.end());
    while (order.size() < names.size()) {
        double best = std::numeric_limits<double>::infinity();
        std::pair<std::string, std::string> pick;
        for (const auto& t : names) {
            if (placed.contains(t)) continue;
            bool ready = true;
            for (const auto& e : dag.edges) {
                if (e.child == t && !placed.contains(e.parent)) ready = false;
            }
            if (!ready) continue;
            for (const auto& [pu, pw] : power) {
                auto trial = order;
                trial.emplace_back(t, pu);
                const double f = replay(dag, power, trial, comm).at(t).finish;
                if (f < best) {
                    best = f;
                    pick = {t, pu};
                }
            }
        }
        order.push_back(pick);
        placed.insert(pick.first);
    }
    return replay(dag, power, order, comm);
}

Dag random_dag(SeededRng& rng, int n) {
    Dag dag;
    dag.id = "rand";
    for (int i = 0; i < n; ++i) {
        dag.tasks.push_back(DagTask{"t" + std::to_string(i), 1.0 + static_cast<double>(rng.below(9))});
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform01() < 0.4) {
                dag.edges.push_back(DagEdge{"t" + std::to_string(i), "t" + std::to_string(j),
                                            static_cast<double>(rng.below(4))});
            }
        }
    }
    return dag;
}

void check_valid(const Dag& dag, const Schedule& s, const CommEstimator& comm) {
    REQUIRE(s.assignments.size() == dag.tasks.size());
    for (const auto& e : dag.edges) {
        const auto& p = s.assignments.at(e.parent);
        const auto& c = s.assignments.at(e.child);
        const double c_delay = p.pu == c.pu ? 0.0 : comm(p.pu, c.pu, e.bytes);
        CHECK(c.start >= p.finish + c_delay - 1e-12);
    }
    for (const auto& [a, x] : s.assignments) {
        for (const auto& [b, y] : s.assignments) {
            if (a < b && x.pu == y.pu) {
                CHECK((x.finish <= y.start + 1e-12 || y.finish <= x.start + 1e-12));
            }
        }
    }
}

struct Rig;

struct RigEffects : FaultEffects {
    Rig* rig = nullptr;
    void crash(const ComponentInfo& c, bool permanent) override;
    void recover(const ComponentInfo& c) override;
    void omission(const ComponentInfo&, double) override {}
    void end_omission(const ComponentInfo&) override {}
    void timing(const ComponentInfo& c, double d) override;
    bool byzantine(const ComponentInfo& c) override;
};

struct Rig {
    Engine engine;
    ComponentRegistry registry;
    Topology topology{registry};
    Network network{engine, topology, registry};
    ComputeCluster compute{engine, registry};
    Monitor monitor{engine};
    JobTable jobs;
    RigEffects effects;
    FaultInjector injector{engine, registry, monitor, effects};
    std::unique_ptr<Scheduler> sched;

    explicit Rig(SchedulerConfig config = {}, double power = 50.0, std::uint64_t seed = 7) : engine(seed) {
        testsupport::four_centers(topology, 8e6);
        for (const char* c : {"A", "B", "C", "D"}) {
            compute.add_pu(ProcessingUnit{std::string(c) + ".pu0", c, power, 1, ""});
        }
        effects.rig = this;
        sched = std::make_unique<Scheduler>(engine, registry, compute, network, topology, monitor, jobs, config);
    }

    std::vector<TraceRow> rows(std::string_view kind) const { return engine.trace().select(kind); }
};

void RigEffects::crash(const ComponentInfo& c, bool) {
    if (c.kind == ComponentKind::processing_unit) {
        rig->sched->pu_crashed(c.id, rig->compute.crash(c.id));
    } else {
        rig->network.component_down(c.id);
    }
}

void RigEffects::recover(const ComponentInfo& c) {
    if (c.kind == ComponentKind::processing_unit) {
        rig->sched->pu_recovered(c.id);
    } else {
        rig->network.component_up(c.id);
    }
}

void RigEffects::timing(const ComponentInfo& c, double d) {
    if (c.kind == ComponentKind::processing_unit) rig->compute.delay(c.id, d);
}

bool RigEffects::byzantine(const ComponentInfo& c) {
    if (c.kind == ComponentKind::processing_unit) return rig->compute.corrupt(c.id) > 0;
    if (c.kind == ComponentKind::scheduler) {
        rig->sched->randomize_next_placement();
        return true;
    }
    return false;
}

Job make_job(const std::string& id, double work, std::string pu = {}) {
    Job j;
    j.id = id;
    j.work = work;
    j.planned_pu = std::move(pu);
    return j;
}

}  // namespace

// ---------------------------------------------------------------- planning

TEST_CASE("single task on a single PU finishes at work/power") {
    Dag dag{"one", {{"a", 30.0}}, {}};
    const auto s = plan_dag(dag, {{"p", 3.0, 1}}, PlanPolicy::etf, flat_comm(1.0));
    CHECK(s.assignments.at("a") == Assignment{"p", 0.0, 10.0});
    CHECK(s.makespan() == 10.0);
}

TEST_CASE("ETF co-locates a child with its parent when communication costs") {
    Dag dag{"chain", {{"A", 4.0}, {"B", 2.0}}, {{"A", "B", 100.0}}};
    const std::vector<PlanPu> pus{{"p0", 1.0, 1}, {"p1", 1.0, 1}};
    const auto s = plan_dag(dag, pus, PlanPolicy::etf, flat_comm(3.0));
    // Same PU: 4 + 2 = 6; other PU: 4 + 3 + 2 = 9.
    CHECK(s.assignments.at("B").pu == s.assignments.at("A").pu);
    CHECK(s.assignments.at("B").finish == 6.0);
}

TEST_CASE("ETF matches a brute-force replay of its greedy rule") {
    SeededRng rng(2024);
    for (int trial = 0; trial < 150; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(5));
        const int m = 1 + static_cast<int>(rng.below(3));
        const Dag dag = random_dag(rng, n);
        std::vector<PlanPu> pus;
        std::map<std::string, double> power;
        for (int p = 0; p < m; ++p) {
            const double pw = 1.0 + static_cast<double>(rng.below(3));
            pus.push_back(PlanPu{"pu" + std::to_string(p), pw, 1});
            power["pu" + std::to_string(p)] = pw;
        }
        const auto comm = [](const std::string& a, const std::string& b, double bytes) {
            return a == b ? 0.0 : 0.5 + bytes;
        };
        const auto s = plan_dag(dag, pus, PlanPolicy::etf, comm);
        const auto oracle = etf_oracle(dag, power, comm);
        for (const auto& [task, a] : oracle) {
            CHECK(s.assignments.at(task).pu == a.pu);
            CHECK(std::abs(s.assignments.at(task).finish - a.finish) < 1e-12);
        }
        check_valid(dag, s, comm);
        check_valid(dag, plan_dag(dag, pus, PlanPolicy::mcp, comm), comm);
        check_valid(dag, plan_dag(dag, pus, PlanPolicy::baseline, comm), comm);
    }
}

TEST_CASE("planning is a pure function of its inputs") {
    SeededRng rng(99);
    const Dag dag = random_dag(rng, 5);
    const std::vector<PlanPu> pus{{"x", 1.0, 2}, {"y", 2.0, 1}};
    for (auto policy : {PlanPolicy::baseline, PlanPolicy::etf, PlanPolicy::mcp}) {
        CHECK(plan_dag(dag, pus, policy, flat_comm(1.0)) == plan_dag(dag, pus, policy, flat_comm(1.0)));
    }
}

TEST_CASE("MCP orders tasks by latest start time") {
    // Long branch a->b, short branch c: a and b are critical, c has slack.
    Dag dag{"mcp", {{"a", 5.0}, {"b", 5.0}, {"c", 1.0}}, {{"a", "b", 0.0}}};
    const auto alap = alap_times(dag, {{"p", 1.0, 1}}, flat_comm(0.0));
    CHECK(alap.at("a") == 0.0);
    CHECK(alap.at("b") == 5.0);
    CHECK(alap.at("c") == 9.0);
    const auto s = plan_dag(dag, {{"p", 1.0, 1}}, PlanPolicy::mcp, flat_comm(0.0));
    CHECK(s.assignments.at("c").start == 10.0);
}

TEST_CASE("planner rejects empty PU sets, cycles and the unimplemented policy") {
    Dag dag{"d", {{"a", 1.0}}, {}};
    CHECK_THROWS_AS((void)plan_dag(dag, {}, PlanPolicy::etf, flat_comm(0)), NoPus);
    CHECK_THROWS_AS((void)plan_dag(dag, {{"p", 1, 1}}, PlanPolicy::ccf, flat_comm(0)), UnsupportedPolicy);
    Dag cyc{"c", {{"a", 1.0}, {"b", 1.0}}, {{"a", "b", 0}, {"b", "a", 0}}};
    CHECK_THROWS_AS((void)plan_dag(cyc, {{"p", 1, 1}}, PlanPolicy::etf, flat_comm(0)), CyclicDag);
    CHECK(parse_plan_policy("mcp") == PlanPolicy::mcp);
    CHECK_THROWS((void)parse_plan_policy("heft"));
}

// ---------------------------------------------------------------- timeouts

TEST_CASE("job finishing before its timeout disarms the watch") {
    Rig r;
    Job j = make_job("j", 100.0);
    j.timeout = 10.0;
    r.sched->submit_job(j);
    r.engine.run_until(50);
    CHECK(r.jobs.get("j").state == JobState::finished);
    CHECK(r.jobs.get("j").finished_at == 2.0);
    CHECK(r.rows("disarm").size() == 1);
    CHECK(r.rows("timeout").empty());
}

TEST_CASE("timing fault past the deadline fires the timeout and reschedules") {
    Rig r;
    Job j = make_job("j", 100.0, "A.pu0");
    j.timeout = 5.0;
    r.sched->submit_job(j);
    r.engine.schedule(1.0, EventSpec{}, [&] {
        r.injector.inject("A.pu0", FaultKind{FaultType::timing, 0, Distribution::uniform(10, 10)}, false);
    });
    r.engine.run_until(100);
    CHECK(r.rows("timeout").size() == 1);
    CHECK(r.sched->counters().timeouts == 1);
    const auto resched = r.rows("reschedule");
    REQUIRE(resched.size() == 1);
    CHECK(info_field(resched[0].info, "cause").starts_with("timeout:"));
    CHECK(r.jobs.get("j").state == JobState::finished);
    CHECK(r.jobs.get("j").finished_at == doctest::Approx(7.0));
}

TEST_CASE("each watch ends in exactly one of disarm or timeout") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rig r({}, 50.0, seed);
        SeededRng rng(seed);
        for (int i = 0; i < 12; ++i) {
            Job j = make_job("j" + std::to_string(i), 50.0 + static_cast<double>(rng.below(200)));
            j.timeout = 1.0 + static_cast<double>(rng.below(5));
            r.sched->submit_job(j);
        }
        r.engine.run_until(1e4);
        const auto disarms = r.rows("disarm").size();
        const auto timeouts = r.rows("timeout").size();
        std::size_t starts = r.rows("place").size();
        CHECK(disarms + timeouts == starts);
    }
}

// ---------------------------------------------------------------- rescheduling

TEST_CASE("crash of a busy PU reschedules its job once") {
    Rig r;
    r.sched->submit_job(make_job("j", 100.0, "A.pu0"));
    r.engine.schedule(1.0, EventSpec{}, [&] { r.injector.inject("A.pu0", FaultKind{FaultType::crash}, true); });
    r.engine.run_until(100);
    CHECK(r.sched->counters().rescheduled == 1);
    const auto notify = r.engine.trace().select("notify");
    const auto resched = r.rows("reschedule");
    REQUIRE(resched.size() == 1);
    bool joined = false;
    for (const auto& n : notify) {
        if (n.target == "scheduler" && info_field(resched[0].info, "cause") == "notify:" + std::to_string(n.seq)) {
            joined = true;
        }
    }
    CHECK(joined);
    CHECK(r.jobs.get("j").state == JobState::finished);
    CHECK(r.jobs.get("j").pu != "A.pu0");
    CHECK(r.jobs.get("j").finished_at == doctest::Approx(3.0));
}

TEST_CASE("exhausted retries fail the job") {
    SchedulerConfig cfg;
    cfg.max_retries = 0;
    Rig r(cfg);
    r.sched->submit_job(make_job("j", 100.0, "A.pu0"));
    r.sched->submit_job(make_job("k", 100.0, "B.pu0"));
    r.engine.schedule(1.0, EventSpec{}, [&] { r.injector.inject("A.pu0", FaultKind{FaultType::crash}, true); });
    r.engine.run_until(100);
    CHECK(r.jobs.get("j").state == JobState::failed);
    CHECK(r.sched->counters().finished == r.sched->counters().submitted - 1);
    CHECK(r.rows("job-failed").size() == 1);
}

TEST_CASE("crash of an idle PU takes no rescheduling action") {
    Rig r;
    r.sched->submit_job(make_job("j", 100.0, "A.pu0"));
    r.engine.schedule(1.0, EventSpec{}, [&] { r.injector.inject("C.pu0", FaultKind{FaultType::crash}, true); });
    r.engine.run_until(100);
    CHECK(r.sched->counters().rescheduled == 0);
    CHECK(r.jobs.get("j").finished_at == 2.0);
}

TEST_CASE("unlimited retries with a surviving PU finalize every job") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        SchedulerConfig cfg;
        cfg.max_retries = -1;
        Rig r(cfg, 10.0, seed);
        SeededRng rng(seed * 31);
        const std::uint64_t n = 20;
        for (std::uint64_t i = 0; i < n; ++i) r.sched->submit_job(make_job("j" + std::to_string(i), 10.0 + rng.below(100)));
        for (const char* pu : {"A.pu0", "B.pu0", "C.pu0"}) {
            FaultProfile p;
            p.component = pu;
            p.time_to_failure = Distribution::exponential(5.0);
            p.kind = FaultKind{FaultType::crash};
            p.time_to_repair = Distribution::exponential(3.0);
            r.injector.attach_profile(p);
        }
        r.engine.run_until(2000);
        const auto& c = r.sched->counters();
        CHECK(c.submitted == n);
        CHECK(c.finished == n);
        CHECK(c.failed == 0);
        CHECK(r.rows("reschedule").size() == c.rescheduled);
    }
}

// ---------------------------------------------------------------- checkpoints

TEST_CASE("snapshot at half of a job records half the work") {
    Rig r;
    r.sched->submit_job(make_job("j", 100.0));
    std::optional<Snapshot> snap;
    r.engine.schedule(1.0, EventSpec{}, [&] { snap = r.sched->checkpoint("j"); });
    r.engine.run_until(10);
    REQUIRE(snap);
    CHECK(snap->work_done == 50.0);
    CHECK(snap->taken_at == 1.0);
    CHECK(r.jobs.get("j").finished_at == 2.0);
}

TEST_CASE("snapshot of a queued job is rejected") {
    Rig r;
    for (const char* pu : {"A.pu0", "B.pu0", "C.pu0", "D.pu0"}) r.sched->submit_job(make_job(std::string("busy-") + pu, 100, pu));
    r.sched->submit_job(make_job("q", 100.0, "A.pu0"));
    CHECK(r.jobs.get("q").state == JobState::queued);
    CHECK_THROWS_AS(r.sched->checkpoint("q"), JobNotRunning);
}

TEST_CASE("static checkpoints every 10 s of a 35 s job give three snapshots") {
    Rig r({}, 1.0);
    r.sched->submit_job(make_job("j", 35.0), CheckpointPolicy{CheckpointMode::periodic, 10.0});
    r.engine.run_until(100);
    CHECK(r.sched->snapshots().size() == 3);
    CHECK(r.sched->snapshots().back().work_done == 30.0);
}

TEST_CASE("dynamic checkpoint on a fault notification in the job's center") {
    Rig r;
    r.topology.attach("A.pu1", ComponentKind::processing_unit, "A");
    r.compute.add_pu(ProcessingUnit{"A.pu1", "A", 50.0, 1, ""});
    r.sched->submit_job(make_job("j", 100.0, "A.pu0"), CheckpointPolicy{CheckpointMode::on_notification, 0});
    r.engine.schedule(0.5, EventSpec{}, [&] { r.injector.inject("A.pu1", FaultKind{FaultType::crash}, true); });
    r.engine.run_until(10);
    REQUIRE(r.sched->snapshots().size() == 1);
    CHECK(r.sched->snapshots()[0].work_done == 25.0);
}

TEST_CASE("restore runs only the remaining work") {
    Rig r;
    r.sched->submit_job(make_job("j", 100.0, "A.pu0"));
    std::optional<Snapshot> snap;
    std::string cont;
    r.engine.schedule(1.0, EventSpec{}, [&] {
        snap = r.sched->checkpoint("j");
        r.injector.inject("A.pu0", FaultKind{FaultType::crash}, true);
    });
    r.engine.schedule(1.0, EventSpec{}, [&] { cont = r.sched->restore(*snap, "B.pu0"); });
    r.engine.run_until(10);
    // The automatic reschedule resumed j from the same snapshot; the explicit
    // restore is an independent continuation.
    const Job& c = r.jobs.get(cont);
    CHECK(c.work == 50.0);
    CHECK(c.finished_at - c.started_at == doctest::Approx(1.0));
    CHECK(snap->work_done + c.work == 100.0);
    CHECK(r.jobs.get("j").finished_at == doctest::Approx(2.0));
    CHECK_THROWS_AS(r.sched->restore(*snap, "A.pu0"), PuDown);
}

TEST_CASE("restoring a complete snapshot yields a zero-work job") {
    Rig r;
    r.sched->submit_job(make_job("j", 100.0));
    std::optional<Snapshot> snap;
    r.engine.schedule(1.999999, EventSpec{}, [&] { snap = r.sched->checkpoint("j"); });
    r.engine.run_until(10);
    Snapshot full = *snap;
    full.work_done = 100.0;
    const auto id = r.sched->restore(full, "C.pu0");
    r.engine.run_until(20);
    CHECK(r.jobs.get(id).work == 0.0);
    CHECK(r.jobs.get(id).finished_at == r.jobs.get(id).started_at);
}

// ---------------------------------------------------------------- replication

TEST_CASE("strict majority decides for every tolerated corruption pattern") {
    for (int k = 1; k <= 5; ++k) {
        const int tolerated = (k - 1) / 2;
        for (int mask = 0; mask < (1 << k); ++mask) {
            std::vector<std::string> results;
            int bad = 0;
            for (int i = 0; i < k; ++i) {
                if (mask & (1 << i)) {
                    results.push_back("corrupt:" + std::to_string(i));
                    ++bad;
                } else {
                    results.push_back("v");
                }
            }
            const auto d = decide(results);
            if (bad <= tolerated) {
                CHECK(d == std::optional<std::string>("v"));
            } else if (2 * (k - bad) <= k && k > 1) {
                CHECK(d != std::optional<std::string>("v"));
            }
        }
    }
    CHECK(decide({"a", "b"}) == std::nullopt);
    CHECK(decide({"a"}) == std::optional<std::string>("a"));
}

TEST_CASE("three replicas outvote one Byzantine result") {
    Rig r;
    const auto id = r.sched->replicate(make_job("j", 100.0), 3);
    const auto& g = r.sched->group(id);
    r.engine.schedule(1.0, EventSpec{}, [&] {
        r.injector.inject(r.jobs.get(g.replicas[1]).pu, FaultKind{FaultType::byzantine}, false);
    });
    r.engine.run_until(50);
    std::set<std::string> hosts;
    for (const auto& rep : g.replicas) hosts.insert(r.jobs.get(rep).pu);
    CHECK(hosts.size() == 3);
    CHECK_FALSE(hosts.contains(r.jobs.get(g.voter).pu));
    REQUIRE(g.decided);
    CHECK(*g.decided == "ok:j");
    CHECK(r.rows("vote").size() == 1);
    CHECK_THROWS_AS(r.sched->replicate(make_job("big", 1.0), 5), NotEnoughPus);
}

TEST_CASE("single replica decides its own output") {
    Rig r;
    const auto id = r.sched->replicate(make_job("j", 10.0), 1);
    r.engine.run_until(10);
    CHECK(r.sched->group(id).decided == std::optional<std::string>("ok:j"));
}

// ---------------------------------------------------------------- DAG runs

TEST_CASE("DAG children start after their inputs arrive") {
    Rig r;
    Dag dag{"fork", {{"a", 50.0}, {"b", 50.0}, {"c", 50.0}}, {{"a", "b", 1e6}, {"a", "c", 1e6}}};
    r.sched->submit_dag(dag, "d1", "A");
    r.engine.run_until(100);
    const Job& a = r.jobs.get("d1/a");
    const Job& b = r.jobs.get("d1/b");
    const Job& c = r.jobs.get("d1/c");
    CHECK(a.finished_at == 1.0);
    CHECK(b.state == JobState::finished);
    CHECK(c.state == JobState::finished);
    // One child runs beside its parent, the other waits for a WAN transfer.
    CHECK(std::min(b.started_at, c.started_at) == 1.0);
    CHECK(std::max(b.started_at, c.started_at) > 1.0);
}

TEST_CASE("ETF plan pins each task job to its planned PU") {
    SchedulerConfig cfg;
    cfg.policy = PlanPolicy::etf;
    Rig r(cfg);
    Dag dag{"chain", {{"a", 50.0}, {"b", 50.0}}, {{"a", "b", 1e6}}};
    r.sched->submit_dag(dag, "d", "A");
    r.engine.run_until(100);
    CHECK(r.jobs.get("d/b").pu == r.sched->planned("d/b")->pu);
    CHECK(r.jobs.get("d/b").pu == r.jobs.get("d/a").pu);
    CHECK(r.jobs.get("d/b").finished_at == 2.0);
}

TEST_CASE("transfer deadline cancels a slow input and abandons the child") {
    SchedulerConfig cfg;
    cfg.transfer_timeout_s = 0.5;
    Rig r(cfg);
    Dag dag{"slow",
            {{"a", 50.0}, {"b", 50.0}, {"c", 50.0}, {"e", 50.0}},
            {{"a", "b", 1e8}, {"a", "c", 1e8}, {"c", "e", 0}}};
    r.sched->submit_dag(dag, "d", "A");
    r.engine.run_until(500);
    CHECK(r.jobs.get("d/a").state == JobState::finished);
    CHECK(r.jobs.get("d/b").state == JobState::finished);
    CHECK_FALSE(r.jobs.contains("d/c"));
    CHECK_FALSE(r.jobs.contains("d/e"));
    CHECK(r.rows("dag-abandon").size() == 1);
    CHECK(r.rows("timeout").size() == 1);
    // 0.5 s at 1e6 B/s went out before the deadline; the unsent rest is lost.
    CHECK(r.network.stats().lost_bytes == doctest::Approx(1e8 - 0.5e6));
}
