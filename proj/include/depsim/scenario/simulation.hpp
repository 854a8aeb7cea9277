#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "depsim/dependsched/scheduler.hpp"
#include "depsim/engine/engine.hpp"
#include "depsim/faults/faults.hpp"
#include "depsim/resources/compute.hpp"
#include "depsim/resources/database.hpp"
#include "depsim/resources/network.hpp"
#include "depsim/resources/topology.hpp"
#include "depsim/scenario/config.hpp"
#include "depsim/scenario/metrics.hpp"
#include "depsim/security/security.hpp"
#include "depsim/workload/job.hpp"

namespace depsim {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunReport {
    std::string run_id;
    std::uint64_t seed = 0;
    double horizon = 0.0;
    std::uint64_t submitted = 0;
    std::uint64_t finished = 0;
    std::uint64_t failed = 0;
    std::uint64_t rescheduled = 0;
    double lost_bytes = 0.0;
    double mean_transfer_time = 0.0;
    std::uint64_t attacks_detected = 0;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// One run of a scenario: builds every model from the config, drives the
/// activities and fault profiles, and collects metrics. Not reusable.
class Simulation final : private FaultEffects {
public:
    explicit Simulation(ScenarioConfig config);
    ~Simulation() override;
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Runs to the configured horizon. Callable once.
    const RunReport& run();

    [[nodiscard]] const ScenarioConfig& config() const noexcept { return config_; }
    [[nodiscard]] const RunReport& report() const noexcept { return report_; }
    Engine& engine() noexcept { return engine_; }
    [[nodiscard]] const Engine& engine() const noexcept { return engine_; }
    [[nodiscard]] const MetricsStore& metrics() const noexcept { return metrics_; }
    [[nodiscard]] const ComponentRegistry& registry() const noexcept { return registry_; }
    [[nodiscard]] const Topology& topology() const noexcept { return topology_; }
    [[nodiscard]] const Network& network() const noexcept { return network_; }
    [[nodiscard]] const ComputeCluster& compute() const noexcept { return compute_; }
    [[nodiscard]] const JobTable& jobs() const noexcept { return jobs_; }
    [[nodiscard]] const Scheduler& scheduler() const noexcept { return *scheduler_; }
    [[nodiscard]] const SecurityService& security() const noexcept { return security_; }
    [[nodiscard]] const FaultInjector& injector() const noexcept { return injector_; }

private:
    void build_resources();
    void build_security();
    void schedule_activities();
    void arrive(const ActivityConfig& activity, std::size_t index);
    void submit_job(const ActivityConfig& activity, std::size_t index);
    /// A database request from `src`: filter, optional handshake,
    /// authorization, transfer of the request, service.
    void db_request(const ActivityConfig& activity, const std::string& src, const std::string& op, bool attack);
    void db_continue(const ActivityConfig& activity, const std::string& src, const std::string& op,
                     double bytes);
    const Certificate& credential_for(const std::string& credential, const std::string& component);
    void job_finished(const Job& job);

    void crash(const ComponentInfo& component, bool permanent) override;
    void recover(const ComponentInfo& component) override;
    void omission(const ComponentInfo& component, double loss_fraction) override;
    void end_omission(const ComponentInfo& component) override;
    void timing(const ComponentInfo& component, double extra_delay) override;
    bool byzantine(const ComponentInfo& component) override;

    ScenarioConfig config_;
    Engine engine_;
    MetricsStore metrics_;
    ComponentRegistry registry_;
    Topology topology_;
    Network network_;
    ComputeCluster compute_;
    DatabaseService databases_;
    Monitor monitor_;
    JobTable jobs_;
    FaultInjector injector_;
    SecurityService security_;
    std::unique_ptr<Scheduler> scheduler_;
    std::map<std::string, std::string, std::less<>> db_of_center_;
    Certificate anonymous_;
    bool ran_ = false;
    RunReport report_;
};

/// Run id `<scenario>-s<seed>`.
[[nodiscard]] std::string run_id(const ScenarioConfig& config);

/// Header `run_id,seed,time,metric,component,value`; rows ordered by
/// (time, metric, component).
[[nodiscard]] std::string metrics_csv(const MetricsStore& metrics, const RunReport& report);
[[nodiscard]] std::string report_header();
[[nodiscard]] std::string report_row(const RunReport& report);
/// Writes metrics.csv, report.csv and trace.csv into `dir` (created if
/// missing). Throws IoError.
void export_run(const Simulation& sim, const std::string& dir);
/// Throws IoError.
void write_file(const std::string& path, const std::string& content);

}  // namespace depsim
