#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/engine/engine.hpp"
#include "depsim/resources/components.hpp"

namespace depsim {

class NoSlot : public std::runtime_error {
public:
    explicit NoSlot(const std::string& pu) : std::runtime_error("no free slot on " + pu) {}
};

class PuDown : public std::runtime_error {
public:
    explicit PuDown(const std::string& pu) : std::runtime_error("processing unit is down: " + pu) {}
};

struct ProcessingUnit {
    std::string id;
    std::string center;
    /// Work units per second.
    double power = 1.0;
    int slots = 1;
    std::string vo;
};

/// One job occupying one slot.
struct Execution {
    std::string job;
    std::string pu;
    SimTime started = 0.0;
    /// Work this execution has to perform.
    double work = 0.0;
    double extra_delay = 0.0;
    bool corrupted = false;
    EventId completion = 0;
};

/// Space-shared processing units: each job holds one slot at full PU power,
/// so a job of `work` units finishes `work / power` seconds after it starts.
class ComputeCluster {
public:
    using Callback = std::function<void(const Execution&)>;

    ComputeCluster(Engine& engine, ComponentRegistry& registry) : engine_(engine), registry_(registry) {}

    /// The PU id must already be registered as a processing unit.
    void add_pu(const ProcessingUnit& pu);
    [[nodiscard]] const ProcessingUnit& pu(std::string_view id) const;
    [[nodiscard]] std::vector<std::string> pu_ids() const;

    [[nodiscard]] int running_count(std::string_view pu) const;
    [[nodiscard]] bool has_free_slot(std::string_view pu) const;
    [[nodiscard]] std::vector<std::string> running_jobs(std::string_view pu) const;
    [[nodiscard]] const Execution* execution(std::string_view job) const;

    /// Throws PuDown or NoSlot. `on_finish` runs when the job completes.
    EventId execute(const std::string& job, const std::string& pu, double work, Callback on_finish);

    /// Work performed so far by a running job.
    [[nodiscard]] double work_done(std::string_view job) const;

    /// Stops a running job without completing it; returns the work it did.
    double abort(const std::string& job, const std::string& reason);

    /// Interrupts every job on the PU (the registry is updated by the caller);
    /// returns the interrupted job ids in start order.
    std::vector<std::string> crash(const std::string& pu);
    /// Postpones the completion of every job on the PU.
    void delay(const std::string& pu, double seconds);
    /// Postpones the completion of one running job.
    void delay_job(const std::string& job, double seconds);
    [[nodiscard]] SimTime completion_time(std::string_view job) const;
    /// Marks the results of the PU's running jobs as corrupted.
    std::size_t corrupt(const std::string& pu);

private:
    void complete(const std::string& job);

    Engine& engine_;
    ComponentRegistry& registry_;
    std::map<std::string, ProcessingUnit, std::less<>> pus_;
    std::map<std::string, Execution, std::less<>> running_;
    std::map<std::string, Callback, std::less<>> callbacks_;
    std::map<std::string, std::vector<std::string>, std::less<>> by_pu_;
};

}  // namespace depsim
