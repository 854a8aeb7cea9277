#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/engine/engine.hpp"

namespace depsim {

enum class JobState { created, queued, running, finished, failed, rescheduled };

std::string_view to_string(JobState state) noexcept;

class IllegalTransition : public std::logic_error {
public:
    IllegalTransition(const std::string& job, JobState from, JobState to);
};

/// created→queued→running→{finished|failed|rescheduled}; rescheduled→queued.
[[nodiscard]] bool is_legal_transition(JobState from, JobState to) noexcept;

struct Job {
    std::string id;
    double work = 0.0;
    double input_size = 0.0;
    double output_size = 0.0;
    JobState state = JobState::created;
    std::optional<double> timeout;
    std::string vo;
    std::string credential;
    /// Optional memory requirement checked by access policies.
    double memory = 0.0;
    /// Submitting center; output goes to its database server when configured.
    std::string center;

    // Runtime bookkeeping.
    std::string pu;
    /// PU chosen by a DAG plan; the dispatcher prefers it.
    std::string planned_pu;
    int retries_used = 0;
    /// Work already secured by a restored snapshot.
    double work_done = 0.0;
    SimTime submitted_at = 0.0;
    SimTime started_at = 0.0;
    SimTime finished_at = 0.0;
    bool corrupted = false;
};

/// All jobs of a run with their lifecycle bookkeeping.
class JobTable {
public:
    /// The job must be in the created state and its id unused.
    Job& add(Job job);
    [[nodiscard]] bool contains(std::string_view id) const { return index_.find(id) != index_.end(); }
    [[nodiscard]] const Job& get(std::string_view id) const;
    Job& get(std::string_view id);

    /// Throws IllegalTransition.
    void transition(std::string_view id, JobState to);

    [[nodiscard]] std::size_t count(JobState state) const;
    [[nodiscard]] std::size_t size() const noexcept { return order_.size(); }
    /// Ids in creation order.
    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return order_; }

private:
    std::map<std::string, Job, std::less<>> index_;
    std::vector<std::string> order_;
};

}  // namespace depsim
