#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/dependsched/planner.hpp"
#include "depsim/engine/engine.hpp"
#include "depsim/faults/faults.hpp"
#include "depsim/resources/compute.hpp"
#include "depsim/resources/network.hpp"
#include "depsim/resources/topology.hpp"
#include "depsim/workload/dag.hpp"
#include "depsim/workload/job.hpp"

namespace depsim {

class JobNotRunning : public std::logic_error {
public:
    explicit JobNotRunning(const std::string& job) : std::logic_error("job is not running: " + job) {}
};

class NotEnoughPus : public std::runtime_error {
public:
    NotEnoughPus(int wanted, std::size_t available)
        : std::runtime_error("replication needs " + std::to_string(wanted) + " distinct PUs, " +
                             std::to_string(available) + " available") {}
};

struct Snapshot {
    std::string id;
    std::string job;
    SimTime taken_at = 0.0;
    double work_done = 0.0;
    std::string pu;
};

enum class CheckpointMode { none, periodic, on_notification };

struct CheckpointPolicy {
    CheckpointMode mode = CheckpointMode::none;
    /// Seconds between periodic snapshots.
    double interval = 0.0;

    friend bool operator==(const CheckpointPolicy&, const CheckpointPolicy&) = default;
};

struct ReplicaGroup {
    std::string id;
    std::string original;
    int k = 1;
    std::vector<std::string> replicas;
    std::string voter;
    /// Result value per replica that finished.
    std::map<std::string, std::string> results;
    std::optional<std::string> decided;
    bool closed = false;
};

/// Strict-majority value among `results`, if any.
[[nodiscard]] std::optional<std::string> decide(const std::vector<std::string>& results);

struct SchedulerConfig {
    PlanPolicy policy = PlanPolicy::baseline;
    bool reschedule = true;
    /// Reschedules allowed per job; negative means unlimited.
    int max_retries = 3;
    double checkpoint_cost_s = 0.0;
    /// Deadline for each DAG edge transfer.
    std::optional<double> transfer_timeout_s;
};

struct SchedulerCounters {
    std::uint64_t submitted = 0;
    std::uint64_t finished = 0;
    std::uint64_t failed = 0;
    std::uint64_t rescheduled = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t snapshots = 0;
};

/// Job scheduler with fault-tolerance mechanisms.
///
/// One FIFO queue feeds the PUs: a job pinned to a PU (by a DAG plan or a
/// restore) waits for that PU, any other job goes to the least-loaded
/// operational eligible PU, ties by id. Jobs lost to a PU crash are handled
/// when the monitor's notification arrives: re-queued while retries remain,
/// failed otherwise.
class Scheduler {
public:
    using JobHook = std::function<void(const Job&)>;
    using Eligibility = std::function<bool(const Job&, const ProcessingUnit&)>;

    Scheduler(Engine& engine, ComponentRegistry& registry, ComputeCluster& compute, Network& network,
              Topology& topology, Monitor& monitor, JobTable& jobs, SchedulerConfig config);

    static constexpr std::string_view kId = "scheduler";

    [[nodiscard]] const SchedulerConfig& config() const noexcept { return config_; }
    void set_eligibility(Eligibility eligible) { eligible_ = std::move(eligible); }
    void on_finished(JobHook hook) { finished_hook_ = std::move(hook); }

    /// Queues a new job (which must be in the created state).
    void submit_job(Job job, CheckpointPolicy checkpoint = {});
    /// Plans and starts one DAG instance; task jobs are `<instance>/<task>`.
    void submit_dag(const Dag& dag, const std::string& instance, const std::string& center,
                    CheckpointPolicy checkpoint = {});

    /// State update for a PU crash: the PU's jobs were interrupted.
    void pu_crashed(const std::string& pu, const std::vector<std::string>& lost_jobs);
    void pu_recovered(const std::string& pu);
    /// Byzantine scheduler fault: the next placement picks a random PU.
    void randomize_next_placement() { randomize_next_ = true; }

    /// Throws JobNotRunning.
    Snapshot checkpoint(const std::string& job);
    [[nodiscard]] std::optional<Snapshot> latest_snapshot(std::string_view job) const;
    [[nodiscard]] const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }
    /// Submits a continuation job with the snapshot's remaining work pinned to
    /// `pu`; returns its id. Throws PuDown.
    std::string restore(const Snapshot& snapshot, const std::string& pu);

    /// Runs `k` copies on distinct PUs and a voter; returns the group id.
    /// Throws NotEnoughPus.
    std::string replicate(Job job, int k);
    [[nodiscard]] const ReplicaGroup& group(std::string_view id) const;

    [[nodiscard]] const SchedulerCounters& counters() const noexcept { return counters_; }
    [[nodiscard]] std::size_t queue_length() const noexcept { return queue_.size(); }
    /// PU a DAG plan chose for a task job, if any.
    [[nodiscard]] std::optional<Assignment> planned(std::string_view job) const;

private:
    struct TaskRun {
        int pending_parents = 0;
        int pending_transfers = 0;
        bool released = false;
        bool abandoned = false;
        std::string target_pu;
    };
    struct DagRun {
        Dag dag;
        std::string instance;
        std::string center;
        CheckpointPolicy checkpoint;
        Schedule plan;
        std::map<std::string, TaskRun> tasks;
    };

    void on_notification(const FaultEvent& event, EventId seq);
    void dispatch();
    std::optional<std::string> choose_pu(const Job& job);
    std::optional<std::string> least_loaded(const Job& job, bool need_free_slot,
                                            const std::vector<std::string>& exclude = {}) const;
    void start(Job& job, const std::string& pu);
    void on_complete(const std::string& job_id, const Execution& ex);
    void on_timeout(const std::string& job_id, std::uint64_t run);
    void lost(const std::string& job_id, const std::string& cause);
    void disarm(const std::string& job_id);
    void periodic_checkpoint(const std::string& job_id, std::uint64_t run);

    void task_finished(std::size_t run, const std::string& task);
    void task_failed(std::size_t run, const std::string& task);
    void stage(std::size_t run, const std::string& task);
    void release(std::size_t run, const std::string& task);
    void transfer_done(std::size_t run, const std::string& task, const Transfer& t);
    double estimate_comm(const std::string& from, const std::string& to, double bytes) const;

    void replica_terminal(const std::string& job_id, bool finished);
    void voter_done(const std::string& group_id, bool finished);

    Engine& engine_;
    ComponentRegistry& registry_;
    ComputeCluster& compute_;
    Network& network_;
    Topology& topology_;
    Monitor& monitor_;
    JobTable& jobs_;
    SchedulerConfig config_;
    Eligibility eligible_;
    JobHook finished_hook_;
    SeededRng rng_;

    std::deque<std::string> queue_;
    bool dispatching_ = false;
    bool randomize_next_ = false;
    SchedulerCounters counters_;

    std::map<std::string, std::vector<std::string>, std::less<>> lost_on_;
    std::map<std::string, EventId, std::less<>> watches_;
    std::map<std::string, std::uint64_t, std::less<>> run_of_;
    std::uint64_t next_run_ = 1;
    std::map<std::string, CheckpointPolicy, std::less<>> checkpoint_policy_;
    std::vector<Snapshot> snapshots_;
    std::map<std::string, std::size_t, std::less<>> latest_snapshot_;
    std::map<std::string, int, std::less<>> continuations_;

    std::vector<DagRun> dag_runs_;
    std::map<std::string, std::pair<std::size_t, std::string>, std::less<>> task_of_;

    std::map<std::string, ReplicaGroup, std::less<>> groups_;
    std::map<std::string, std::string, std::less<>> group_of_;
};

}  // namespace depsim
