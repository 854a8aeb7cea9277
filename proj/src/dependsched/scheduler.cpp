#include "depsim/dependsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depsim {

namespace {

std::string fmt(double v) { return format_real(v); }

}  // namespace

std::optional<std::string> decide(const std::vector<std::string>& results) {
    std::map<std::string, std::size_t> tally;
    for (const auto& r : results) ++tally[r];
    for (const auto& [value, n] : tally) {
        if (2 * n > results.size()) return value;
    }
    return std::nullopt;
}

Scheduler::Scheduler(Engine& engine, ComponentRegistry& registry, ComputeCluster& compute, Network& network,
                     Topology& topology, Monitor& monitor, JobTable& jobs, SchedulerConfig config)
    : engine_(engine),
      registry_(registry),
      compute_(compute),
      network_(network),
      topology_(topology),
      monitor_(monitor),
      jobs_(jobs),
      config_(config),
      eligible_([](const Job& j, const ProcessingUnit& p) { return j.vo == p.vo; }),
      rng_(engine.substream("scheduler")) {
    monitor_.subscribe(std::string(kId), {}, [this](const FaultEvent& e, EventId seq) { on_notification(e, seq); });
}

// ---------------------------------------------------------------- jobs

void Scheduler::submit_job(Job job, CheckpointPolicy checkpoint) {
    if (checkpoint.mode == CheckpointMode::periodic && !(checkpoint.interval > 0.0)) {
        throw std::invalid_argument("periodic checkpoint interval must be > 0");
    }
    Job& j = jobs_.add(std::move(job));
    jobs_.transition(j.id, JobState::queued);
    j.submitted_at = engine_.now();
    ++counters_.submitted;
    engine_.record("submit", kId, j.id, "work=" + fmt(j.work));
    if (checkpoint.mode != CheckpointMode::none) {
        checkpoint_policy_[j.id] = checkpoint;
    }
    queue_.push_back(j.id);
    dispatch();
}

std::optional<std::string> Scheduler::least_loaded(const Job& job, bool need_free_slot,
                                                   const std::vector<std::string>& exclude) const {
    std::optional<std::string> best;
    int best_load = std::numeric_limits<int>::max();
    for (const auto& id : compute_.pu_ids()) {
        if (!registry_.is_operational(id)) continue;
        if (need_free_slot && !compute_.has_free_slot(id)) continue;
        if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) continue;
        if (!eligible_(job, compute_.pu(id))) continue;
        const int load = compute_.running_count(id);
        if (load < best_load) {
            best_load = load;
            best = id;
        }
    }
    return best;
}

std::optional<std::string> Scheduler::choose_pu(const Job& job) {
    if (randomize_next_) {
        std::vector<std::string> free;
        for (const auto& id : compute_.pu_ids()) {
            if (compute_.has_free_slot(id) && eligible_(job, compute_.pu(id))) free.push_back(id);
        }
        if (free.empty()) return std::nullopt;
        randomize_next_ = false;
        return free[rng_.below(free.size())];
    }
    if (!job.planned_pu.empty() && registry_.is_operational(job.planned_pu)) {
        if (compute_.has_free_slot(job.planned_pu)) return job.planned_pu;
        return std::nullopt;
    }
    return least_loaded(job, true);
}

void Scheduler::dispatch() {
    if (dispatching_) return;
    dispatching_ = true;
    for (auto it = queue_.begin(); it != queue_.end();) {
        Job& job = jobs_.get(*it);
        const bool random = randomize_next_;
        auto pu = choose_pu(job);
        if (!pu) {
            ++it;
            continue;
        }
        it = queue_.erase(it);
        engine_.record("place", kId, job.id,
                       "pu=" + *pu + ";policy=" + std::string(to_string(config_.policy)) +
                           (random ? ";random=1" : ""));
        start(job, *pu);
    }
    dispatching_ = false;
}

void Scheduler::start(Job& job, const std::string& pu) {
    jobs_.transition(job.id, JobState::running);
    job.pu = pu;
    job.started_at = engine_.now();
    const std::uint64_t run = next_run_++;
    run_of_[job.id] = run;
    const std::string id = job.id;
    compute_.execute(id, pu, std::max(0.0, job.work - job.work_done),
                     [this, id](const Execution& ex) { on_complete(id, ex); });
    if (job.timeout) {
        watches_[id] = engine_.schedule_after(*job.timeout,
                                              EventSpec{EventKind::timeout, "timeout", std::string(kId), id,
                                                        "after=" + fmt(*job.timeout)},
                                              [this, id, run] { on_timeout(id, run); });
    }
    auto cp = checkpoint_policy_.find(id);
    if (cp != checkpoint_policy_.end() && cp->second.mode == CheckpointMode::periodic) {
        engine_.schedule_after(cp->second.interval, EventSpec{EventKind::user, "", std::string(kId), id, ""},
                               [this, id, run] { periodic_checkpoint(id, run); });
    }
}

void Scheduler::disarm(const std::string& job_id) {
    auto it = watches_.find(job_id);
    if (it == watches_.end()) return;
    if (engine_.cancel(it->second)) {
        engine_.record("disarm", kId, job_id);
    }
    watches_.erase(it);
}

void Scheduler::on_complete(const std::string& job_id, const Execution& ex) {
    Job& job = jobs_.get(job_id);
    disarm(job_id);
    jobs_.transition(job_id, JobState::finished);
    job.finished_at = engine_.now();
    job.corrupted = job.corrupted || ex.corrupted;
    job.work_done = job.work;
    ++counters_.finished;
    if (finished_hook_) finished_hook_(job);
    if (auto t = task_of_.find(job_id); t != task_of_.end()) {
        task_finished(t->second.first, t->second.second);
    }
    if (group_of_.contains(job_id)) {
        replica_terminal(job_id, true);
    }
    if (auto g = groups_.find(job_id.substr(0, job_id.rfind('#'))); g != groups_.end() && g->second.voter == job_id) {
        voter_done(g->first, true);
    }
    dispatch();
}

void Scheduler::on_timeout(const std::string& job_id, std::uint64_t run) {
    watches_.erase(job_id);
    const Job& job = jobs_.get(job_id);
    if (job.state != JobState::running || run_of_[job_id] != run || compute_.execution(job_id) == nullptr) {
        return;
    }
    ++counters_.timeouts;
    compute_.abort(job_id, "timeout");
    lost(job_id, "timeout:" + std::to_string(engine_.current_event()));
    dispatch();
}

void Scheduler::lost(const std::string& job_id, const std::string& cause) {
    Job& job = jobs_.get(job_id);
    const bool retry = config_.reschedule && (config_.max_retries < 0 || job.retries_used < config_.max_retries);
    if (retry) {
        jobs_.transition(job_id, JobState::rescheduled);
        ++job.retries_used;
        ++counters_.rescheduled;
        if (auto snap = latest_snapshot(job_id)) {
            job.work_done = snap->work_done;
        }
        engine_.record("reschedule", kId, job_id,
                       "cause=" + cause + ";retry=" + std::to_string(job.retries_used) +
                           ";resume_work=" + fmt(job.work_done));
        jobs_.transition(job_id, JobState::queued);
        queue_.push_back(job_id);
        return;
    }
    jobs_.transition(job_id, JobState::failed);
    job.finished_at = engine_.now();
    ++counters_.failed;
    engine_.record("job-failed", kId, job_id, "cause=" + cause);
    if (auto t = task_of_.find(job_id); t != task_of_.end()) {
        task_failed(t->second.first, t->second.second);
    }
    if (group_of_.contains(job_id)) {
        replica_terminal(job_id, false);
    }
    if (auto g = groups_.find(job_id.substr(0, job_id.rfind('#'))); g != groups_.end() && g->second.voter == job_id) {
        voter_done(g->first, false);
    }
}

// ---------------------------------------------------------------- faults

void Scheduler::pu_crashed(const std::string& pu, const std::vector<std::string>& lost_jobs) {
    auto& pending = lost_on_[pu];
    for (const auto& j : lost_jobs) {
        disarm(j);
        pending.push_back(j);
    }
}

void Scheduler::pu_recovered(const std::string&) { dispatch(); }

void Scheduler::on_notification(const FaultEvent& event, EventId seq) {
    if (!event.recovery && event.kind.type == FaultType::crash) {
        auto it = lost_on_.find(event.component);
        if (it != lost_on_.end()) {
            const auto jobs = std::move(it->second);
            lost_on_.erase(it);
            for (const auto& j : jobs) {
                lost(j, "notify:" + std::to_string(seq));
            }
        }
    }
    if (!event.recovery && !event.center.empty()) {
        for (const auto& [job_id, cp] : checkpoint_policy_) {
            if (cp.mode != CheckpointMode::on_notification) continue;
            const Job& job = jobs_.get(job_id);
            if (job.state == JobState::running && compute_.execution(job_id) != nullptr &&
                registry_.info(job.pu).center == event.center) {
                checkpoint(job_id);
            }
        }
    }
    dispatch();
}

// ---------------------------------------------------------------- checkpoints

Snapshot Scheduler::checkpoint(const std::string& job_id) {
    Job& job = jobs_.get(job_id);
    if (job.state != JobState::running || compute_.execution(job_id) == nullptr) {
        throw JobNotRunning(job_id);
    }
    Snapshot s{"snap" + std::to_string(snapshots_.size() + 1), job_id, engine_.now(),
               std::min(job.work, job.work_done + compute_.work_done(job_id)), job.pu};
    snapshots_.push_back(s);
    latest_snapshot_[job_id] = snapshots_.size() - 1;
    ++counters_.snapshots;
    engine_.record("snapshot", kId, job_id, "id=" + s.id + ";work_done=" + fmt(s.work_done) + ";pu=" + s.pu);
    if (config_.checkpoint_cost_s > 0.0) {
        compute_.delay_job(job_id, config_.checkpoint_cost_s);
    }
    return s;
}

std::optional<Snapshot> Scheduler::latest_snapshot(std::string_view job) const {
    auto it = latest_snapshot_.find(job);
    if (it == latest_snapshot_.end()) return std::nullopt;
    return snapshots_[it->second];
}

void Scheduler::periodic_checkpoint(const std::string& job_id, std::uint64_t run) {
    const Job& job = jobs_.get(job_id);
    if (job.state != JobState::running || run_of_[job_id] != run || compute_.execution(job_id) == nullptr) {
        return;
    }
    if (!(engine_.now() < compute_.completion_time(job_id))) {
        return;
    }
    checkpoint(job_id);
    const double interval = checkpoint_policy_.at(job_id).interval;
    engine_.schedule_after(interval, EventSpec{EventKind::user, "", std::string(kId), job_id, ""},
                           [this, job_id, run] { periodic_checkpoint(job_id, run); });
}

std::string Scheduler::restore(const Snapshot& snapshot, const std::string& pu) {
    (void)compute_.pu(pu);
    if (!registry_.is_operational(pu)) {
        throw PuDown(pu);
    }
    const Job& original = jobs_.get(snapshot.job);
    const int n = ++continuations_[snapshot.job];
    Job next;
    next.id = snapshot.job + "~" + std::to_string(n);
    next.work = std::max(0.0, original.work - snapshot.work_done);
    next.center = original.center;
    next.vo = original.vo;
    next.credential = original.credential;
    next.planned_pu = pu;
    engine_.record("restore", kId, next.id, "from=" + snapshot.id + ";work_done=" + fmt(snapshot.work_done) +
                                                  ";pu=" + pu);
    const std::string id = next.id;
    submit_job(std::move(next));
    return id;
}

// ---------------------------------------------------------------- DAGs

double Scheduler::estimate_comm(const std::string& from, const std::string& to, double bytes) const {
    if (from == to) return 0.0;
    try {
        const auto path = topology_.route(from, to);
        return bytes * 8.0 / topology_.bottleneck(path) + topology_.latency(path);
    } catch (const NoRoute&) {
        return std::numeric_limits<double>::infinity();
    }
}

std::optional<Assignment> Scheduler::planned(std::string_view job) const {
    auto it = task_of_.find(job);
    if (it == task_of_.end()) return std::nullopt;
    const auto& plan = dag_runs_[it->second.first].plan.assignments;
    auto a = plan.find(it->second.second);
    if (a == plan.end()) return std::nullopt;
    return a->second;
}

void Scheduler::submit_dag(const Dag& dag, const std::string& instance, const std::string& center,
                           CheckpointPolicy checkpoint) {
    validate(dag);
    DagRun run{dag, instance, center, checkpoint, {}, {}};
    if (config_.policy == PlanPolicy::etf || config_.policy == PlanPolicy::mcp || config_.policy == PlanPolicy::ccf) {
        std::vector<PlanPu> pus;
        for (const auto& id : compute_.pu_ids()) {
            if (registry_.is_operational(id)) {
                const auto& p = compute_.pu(id);
                pus.push_back(PlanPu{id, p.power, p.slots});
            }
        }
        run.plan = plan_dag(dag, pus, config_.policy,
                            [this](const std::string& a, const std::string& b, double bytes) {
                                return estimate_comm(a, b, bytes);
                            });
    }
    for (const auto& t : dag.tasks) {
        run.tasks[t.name].pending_parents = static_cast<int>(dag.inbound(t.name).size());
    }
    const std::size_t index = dag_runs_.size();
    dag_runs_.push_back(std::move(run));
    engine_.record("dag-submit", kId, instance,
                   "tasks=" + std::to_string(dag.tasks.size()) + ";policy=" + std::string(to_string(config_.policy)));
    for (const auto& name : topological_order(dag)) {
        if (dag_runs_[index].tasks[name].pending_parents == 0) {
            stage(index, name);
        }
    }
}

void Scheduler::stage(std::size_t run_index, const std::string& task) {
    DagRun& run = dag_runs_[run_index];
    TaskRun& tr = run.tasks[task];
    const std::string job_id = run.instance + "/" + task;
    std::string target;
    if (auto a = run.plan.assignments.find(task); a != run.plan.assignments.end() && registry_.is_operational(a->second.pu)) {
        target = a->second.pu;
    } else {
        Job probe;
        probe.id = job_id;
        if (auto pu = least_loaded(probe, false)) target = *pu;
    }
    tr.target_pu = target;
    for (const auto& e : run.dag.inbound(task)) {
        const Job& parent = jobs_.get(run.instance + "/" + e.parent);
        if (e.bytes <= 0.0 || target.empty() || parent.pu == target) continue;
        TransferId tx = 0;
        try {
            ++tr.pending_transfers;
            tx = network_.start_transfer(parent.pu, target, e.bytes,
                                         [this, run_index, task](const Transfer& t) { transfer_done(run_index, task, t); });
        } catch (const NoRoute&) {
            --tr.pending_transfers;
            task_failed(run_index, task);
            return;
        }
        if (config_.transfer_timeout_s) {
            const std::string name = network_.transfer(tx).name;
            engine_.schedule_after(*config_.transfer_timeout_s,
                                   EventSpec{EventKind::timeout, "", std::string(kId), name, ""},
                                   [this, tx, name, run_index, task] {
                                       if (!network_.cancel(tx, "timeout")) return;
                                       engine_.record("timeout", kId, name, "transfer=1");
                                       ++counters_.timeouts;
                                       task_failed(run_index, task);
                                   });
        }
    }
    if (tr.pending_transfers == 0 && !tr.abandoned) {
        release(run_index, task);
    }
}

void Scheduler::transfer_done(std::size_t run_index, const std::string& task, const Transfer& t) {
    TaskRun& tr = dag_runs_[run_index].tasks[task];
    if (tr.abandoned) return;
    if (t.status != TransferStatus::delivered) {
        task_failed(run_index, task);
        return;
    }
    if (--tr.pending_transfers == 0) {
        release(run_index, task);
    }
}

void Scheduler::release(std::size_t run_index, const std::string& task) {
    DagRun& run = dag_runs_[run_index];
    TaskRun& tr = run.tasks[task];
    if (tr.released) return;
    tr.released = true;
    Job job;
    job.id = run.instance + "/" + task;
    job.work = run.dag.task(task).work;
    job.center = run.center;
    job.planned_pu = tr.target_pu;
    task_of_[job.id] = {run_index, task};
    submit_job(std::move(job), run.checkpoint);
}

void Scheduler::task_finished(std::size_t run_index, const std::string& task) {
    const auto children = dag_runs_[run_index].dag.outbound(task);
    for (const auto& e : children) {
        TaskRun& child = dag_runs_[run_index].tasks[e.child];
        if (--child.pending_parents == 0 && !child.abandoned) {
            stage(run_index, e.child);
        }
    }
}

void Scheduler::task_failed(std::size_t run_index, const std::string& task) {
    DagRun& run = dag_runs_[run_index];
    TaskRun& tr = run.tasks[task];
    if (tr.abandoned) return;
    tr.abandoned = true;
    if (!tr.released) {
        engine_.record("dag-abandon", kId, run.instance + "/" + task, "reason=inputs-lost");
    }
}

// ---------------------------------------------------------------- replication

std::string Scheduler::replicate(Job job, int k) {
    if (k < 1) {
        throw std::invalid_argument("replica count must be >= 1");
    }
    std::vector<std::pair<int, std::string>> candidates;
    for (const auto& id : compute_.pu_ids()) {
        if (registry_.is_operational(id) && eligible_(job, compute_.pu(id))) {
            candidates.emplace_back(compute_.running_count(id), id);
        }
    }
    if (static_cast<int>(candidates.size()) < k) {
        throw NotEnoughPus(k, candidates.size());
    }
    std::sort(candidates.begin(), candidates.end());
    ReplicaGroup g;
    g.id = job.id;
    g.original = job.id;
    g.k = k;
    for (int i = 0; i < k; ++i) {
        g.replicas.push_back(job.id + "#r" + std::to_string(i));
    }
    g.voter = job.id + "#vote";
    groups_.emplace(g.id, g);
    engine_.record("replicate", kId, g.id, "k=" + std::to_string(k));
    for (int i = 0; i < k; ++i) {
        Job r = job;
        r.id = g.replicas[static_cast<std::size_t>(i)];
        r.planned_pu = candidates[static_cast<std::size_t>(i)].second;
        group_of_[r.id] = g.id;
        submit_job(std::move(r));
    }
    return g.id;
}

const ReplicaGroup& Scheduler::group(std::string_view id) const {
    auto it = groups_.find(id);
    if (it == groups_.end()) {
        throw std::out_of_range("unknown replica group: " + std::string(id));
    }
    return it->second;
}

void Scheduler::replica_terminal(const std::string& job_id, bool finished) {
    ReplicaGroup& g = groups_.at(group_of_.at(job_id));
    const Job& job = jobs_.get(job_id);
    if (finished) {
        g.results[job_id] = job.corrupted ? "corrupt:" + job_id : "ok:" + g.original;
    }
    std::size_t terminal = 0;
    for (const auto& r : g.replicas) {
        const auto s = jobs_.get(r).state;
        if (s == JobState::finished || s == JobState::failed) ++terminal;
    }
    if (terminal < g.replicas.size()) return;
    Job voter;
    voter.id = g.voter;
    voter.work = 0.0;
    voter.vo = job.vo;
    voter.center = job.center;
    std::vector<std::string> hosts;
    for (const auto& r : g.replicas) hosts.push_back(jobs_.get(r).pu);
    if (auto pu = least_loaded(voter, false, hosts)) {
        voter.planned_pu = *pu;
    }
    submit_job(std::move(voter));
}

void Scheduler::voter_done(const std::string& group_id, bool finished) {
    ReplicaGroup& g = groups_.at(group_id);
    g.closed = true;
    std::vector<std::string> received;
    for (const auto& [r, v] : g.results) received.push_back(v);
    if (finished) {
        g.decided = decide(received);
    }
    engine_.record("vote", kId, group_id,
                   "responses=" + std::to_string(received.size()) + ";decided=" + (g.decided ? *g.decided : "none"));
}

}  // namespace depsim
