#include "depsim/workload/job.hpp"

#include <algorithm>

namespace depsim {

std::string_view to_string(JobState state) noexcept {
    switch (state) {
        case JobState::created: return "created";
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::finished: return "finished";
        case JobState::failed: return "failed";
        case JobState::rescheduled: return "rescheduled";
    }
    return "?";
}

IllegalTransition::IllegalTransition(const std::string& job, JobState from, JobState to)
    : std::logic_error("illegal job transition for " + job + ": " + std::string(to_string(from)) + " -> " +
                       std::string(to_string(to))) {}

bool is_legal_transition(JobState from, JobState to) noexcept {
    switch (from) {
        case JobState::created: return to == JobState::queued;
        case JobState::queued: return to == JobState::running;
        case JobState::running:
            return to == JobState::finished || to == JobState::failed || to == JobState::rescheduled;
        case JobState::rescheduled: return to == JobState::queued;
        case JobState::finished:
        case JobState::failed: return false;
    }
    return false;
}

Job& JobTable::add(Job job) {
    if (job.state != JobState::created) {
        throw IllegalTransition(job.id, job.state, JobState::queued);
    }
    if (job.id.empty() || index_.contains(job.id)) {
        throw std::invalid_argument("job id empty or already used: " + job.id);
    }
    if (!(job.work >= 0.0)) {
        throw std::invalid_argument("job work must be >= 0: " + job.id);
    }
    order_.push_back(job.id);
    const std::string id = job.id;
    return index_.emplace(id, std::move(job)).first->second;
}

const Job& JobTable::get(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw std::out_of_range("unknown job: " + std::string(id));
    }
    return it->second;
}

Job& JobTable::get(std::string_view id) { return const_cast<Job&>(std::as_const(*this).get(id)); }

void JobTable::transition(std::string_view id, JobState to) {
    Job& job = get(id);
    if (!is_legal_transition(job.state, to)) {
        throw IllegalTransition(job.id, job.state, to);
    }
    job.state = to;
}

std::size_t JobTable::count(JobState state) const {
    return static_cast<std::size_t>(
        std::count_if(index_.begin(), index_.end(), [state](const auto& kv) { return kv.second.state == state; }));
}

}  // namespace depsim
