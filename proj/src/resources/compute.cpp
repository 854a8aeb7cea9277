#include "depsim/resources/compute.hpp"

#include <algorithm>
#include <cmath>

namespace depsim {

void ComputeCluster::add_pu(const ProcessingUnit& pu) {
    if (registry_.info(pu.id).kind != ComponentKind::processing_unit) {
        throw std::invalid_argument(pu.id + " is not registered as a processing unit");
    }
    if (!(pu.power > 0.0) || pu.slots < 1) {
        throw std::invalid_argument("processing unit " + pu.id + " needs power > 0 and slots >= 1");
    }
    pus_.emplace(pu.id, pu);
    by_pu_[pu.id];
}

const ProcessingUnit& ComputeCluster::pu(std::string_view id) const {
    auto it = pus_.find(id);
    if (it == pus_.end()) {
        throw UnknownComponent(std::string(id));
    }
    return it->second;
}

std::vector<std::string> ComputeCluster::pu_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, p] : pus_) {
        out.push_back(id);
    }
    return out;
}

int ComputeCluster::running_count(std::string_view pu_id) const {
    auto it = by_pu_.find(pu_id);
    return it == by_pu_.end() ? 0 : static_cast<int>(it->second.size());
}

bool ComputeCluster::has_free_slot(std::string_view pu_id) const {
    return registry_.is_operational(pu_id) && running_count(pu_id) < pu(pu_id).slots;
}

std::vector<std::string> ComputeCluster::running_jobs(std::string_view pu_id) const {
    auto it = by_pu_.find(pu_id);
    return it == by_pu_.end() ? std::vector<std::string>{} : it->second;
}

const Execution* ComputeCluster::execution(std::string_view job) const {
    auto it = running_.find(job);
    return it == running_.end() ? nullptr : &it->second;
}

EventId ComputeCluster::execute(const std::string& job, const std::string& pu_id, double work,
                                Callback on_finish) {
    const auto& p = pu(pu_id);
    if (!registry_.is_operational(pu_id)) {
        throw PuDown(pu_id);
    }
    if (running_count(pu_id) >= p.slots) {
        throw NoSlot(pu_id);
    }
    if (!(work >= 0.0) || !std::isfinite(work)) {
        throw std::invalid_argument("job work must be finite and >= 0");
    }
    if (running_.contains(job)) {
        throw std::logic_error("job already running: " + job);
    }
    Execution ex{job, pu_id, engine_.now(), work, 0.0, false, 0};
    engine_.record("job-start", pu_id, job, "work=" + format_real(work));
    ex.completion = engine_.schedule_after(
        work / p.power, EventSpec{EventKind::completion, "job-finish", pu_id, job, ""},
        [this, job] { complete(job); });
    const EventId id = ex.completion;
    running_.emplace(job, std::move(ex));
    callbacks_.emplace(job, std::move(on_finish));
    by_pu_[pu_id].push_back(job);
    return id;
}

double ComputeCluster::work_done(std::string_view job) const {
    const auto* ex = execution(job);
    if (ex == nullptr) {
        throw std::logic_error("job is not running: " + std::string(job));
    }
    const double done = (engine_.now() - ex->started) * pu(ex->pu).power;
    return std::clamp(done, 0.0, ex->work);
}

void ComputeCluster::complete(const std::string& job) {
    auto node = running_.extract(job);
    auto& jobs = by_pu_[node.mapped().pu];
    jobs.erase(std::find(jobs.begin(), jobs.end(), job));
    auto cb = callbacks_.extract(job);
    if (!cb.empty() && cb.mapped()) {
        cb.mapped()(node.mapped());
    }
}

double ComputeCluster::abort(const std::string& job, const std::string& reason) {
    const double done = work_done(job);
    auto node = running_.extract(job);
    engine_.cancel(node.mapped().completion);
    auto& jobs = by_pu_[node.mapped().pu];
    jobs.erase(std::find(jobs.begin(), jobs.end(), job));
    callbacks_.erase(job);
    engine_.record("interrupt", node.mapped().pu, job, "reason=" + reason);
    return done;
}

std::vector<std::string> ComputeCluster::crash(const std::string& pu_id) {
    const auto jobs = running_jobs(pu_id);
    for (const auto& job : jobs) {
        abort(job, "crash");
    }
    return jobs;
}

void ComputeCluster::delay(const std::string& pu_id, double seconds) {
    if (!(seconds >= 0.0)) {
        throw std::invalid_argument("timing delay must be >= 0");
    }
    for (const auto& job : running_jobs(pu_id)) {
        delay_job(job, seconds);
    }
}

void ComputeCluster::delay_job(const std::string& job, double seconds) {
    auto it = running_.find(job);
    if (it == running_.end()) {
        throw std::logic_error("job is not running: " + job);
    }
    auto& ex = it->second;
    const auto due = engine_.time_of(ex.completion);
    engine_.cancel(ex.completion);
    ex.extra_delay += seconds;
    ex.completion = engine_.schedule(*due + seconds, EventSpec{EventKind::completion, "job-finish", ex.pu, job, ""},
                                     [this, job] { complete(job); });
}

SimTime ComputeCluster::completion_time(std::string_view job) const {
    const auto* ex = execution(job);
    if (ex == nullptr) {
        throw std::logic_error("job is not running: " + std::string(job));
    }
    return *engine_.time_of(ex->completion);
}

std::size_t ComputeCluster::corrupt(const std::string& pu_id) {
    const auto jobs = running_jobs(pu_id);
    for (const auto& job : jobs) {
        running_.find(job)->second.corrupted = true;
    }
    return jobs.size();
}

}  // namespace depsim
