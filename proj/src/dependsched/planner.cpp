#include "depsim/dependsched/planner.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace depsim {

std::string_view to_string(PlanPolicy policy) noexcept {
    switch (policy) {
        case PlanPolicy::baseline: return "baseline";
        case PlanPolicy::etf: return "etf";
        case PlanPolicy::mcp: return "mcp";
        case PlanPolicy::ccf: return "ccf";
    }
    return "?";
}

PlanPolicy parse_plan_policy(std::string_view text) {
    if (text == "baseline") return PlanPolicy::baseline;
    if (text == "etf") return PlanPolicy::etf;
    if (text == "mcp") return PlanPolicy::mcp;
    if (text == "ccf") return PlanPolicy::ccf;
    throw std::invalid_argument("unknown scheduling policy: " + std::string(text));
}

double Schedule::makespan() const {
    double m = 0.0;
    for (const auto& [task, a] : assignments) m = std::max(m, a.finish);
    return m;
}

namespace {

/// Incremental placement state shared by the list heuristics.
class Board {
public:
    Board(const Dag& dag, const std::vector<PlanPu>& pus, const CommEstimator& comm)
        : dag_(dag), comm_(comm) {
        for (const auto& p : pus) {
            pus_.emplace(p.id, p);
            free_at_[p.id] = std::vector<double>(static_cast<std::size_t>(std::max(1, p.slots)), 0.0);
        }
    }

    [[nodiscard]] double data_ready(const std::string& task, const std::string& pu) const {
        double ready = 0.0;
        for (const auto& e : dag_.inbound(task)) {
            const auto& a = schedule_.assignments.at(e.parent);
            const double c = a.pu == pu ? 0.0 : comm_(a.pu, pu, e.bytes);
            ready = std::max(ready, a.finish + c);
        }
        return ready;
    }

    [[nodiscard]] double earliest_start(const std::string& task, const std::string& pu) const {
        const auto& slots = free_at_.at(pu);
        return std::max(data_ready(task, pu), *std::min_element(slots.begin(), slots.end()));
    }

    [[nodiscard]] double finish_if(const std::string& task, const std::string& pu) const {
        return earliest_start(task, pu) + dag_.task(task).work / pus_.at(pu).power;
    }

    void place(const std::string& task, const std::string& pu) {
        const double start = earliest_start(task, pu);
        const double finish = start + dag_.task(task).work / pus_.at(pu).power;
        auto& slots = free_at_.at(pu);
        *std::min_element(slots.begin(), slots.end()) = finish;
        schedule_.assignments[task] = Assignment{pu, start, finish};
        ++placed_on_[pu];
    }

    [[nodiscard]] bool placed(const std::string& task) const { return schedule_.assignments.contains(task); }

    [[nodiscard]] bool ready(const std::string& task) const {
        if (placed(task)) return false;
        for (const auto& e : dag_.inbound(task)) {
            if (!placed(e.parent)) return false;
        }
        return true;
    }

    [[nodiscard]] int count_on(const std::string& pu) const {
        auto it = placed_on_.find(pu);
        return it == placed_on_.end() ? 0 : it->second;
    }

    [[nodiscard]] std::vector<std::string> pu_ids() const {
        std::vector<std::string> out;
        for (const auto& [id, p] : pus_) out.push_back(id);
        return out;
    }

    Schedule take() { return std::move(schedule_); }

private:
    const Dag& dag_;
    const CommEstimator& comm_;
    std::map<std::string, PlanPu> pus_;
    std::map<std::string, std::vector<double>> free_at_;
    std::map<std::string, int> placed_on_;
    Schedule schedule_;
};

std::vector<std::string> sorted_task_names(const Dag& dag) {
    std::vector<std::string> names;
    for (const auto& t : dag.tasks) names.push_back(t.name);
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

std::map<std::string, double> alap_times(const Dag& dag, const std::vector<PlanPu>& pus, const CommEstimator& comm) {
    double power = 0.0;
    for (const auto& p : pus) power += p.power;
    power /= static_cast<double>(pus.size());
    // Nominal edge cost: mean over ordered pairs of distinct PUs.
    auto edge_cost = [&](double bytes) {
        double sum = 0.0;
        int n = 0;
        for (const auto& a : pus) {
            for (const auto& b : pus) {
                if (a.id == b.id) continue;
                sum += comm(a.id, b.id, bytes);
                ++n;
            }
        }
        return n == 0 ? 0.0 : sum / n;
    };
    auto order = topological_order(dag);
    std::map<std::string, double> bottom;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        double tail = 0.0;
        for (const auto& e : dag.outbound(*it)) {
            tail = std::max(tail, edge_cost(e.bytes) + bottom.at(e.child));
        }
        bottom[*it] = dag.task(*it).work / power + tail;
    }
    double critical = 0.0;
    for (const auto& [t, b] : bottom) critical = std::max(critical, b);
    std::map<std::string, double> alap;
    for (const auto& [t, b] : bottom) alap[t] = critical - b;
    return alap;
}

Schedule plan_dag(const Dag& dag, const std::vector<PlanPu>& pus, PlanPolicy policy, const CommEstimator& comm) {
    if (policy == PlanPolicy::ccf) {
        throw UnsupportedPolicy("ccf");
    }
    if (pus.empty()) {
        throw NoPus();
    }
    validate(dag);
    Board board(dag, pus, comm);
    const auto pu_ids = board.pu_ids();
    const auto names = sorted_task_names(dag);

    switch (policy) {
        case PlanPolicy::baseline:
            for (const auto& task : topological_order(dag)) {
                std::string best = pu_ids.front();
                for (const auto& p : pu_ids) {
                    if (board.count_on(p) < board.count_on(best)) best = p;
                }
                board.place(task, best);
            }
            break;
        case PlanPolicy::etf:
            for (std::size_t placed = 0; placed < names.size(); ++placed) {
                double best_finish = std::numeric_limits<double>::infinity();
                std::string best_task, best_pu;
                for (const auto& task : names) {
                    if (!board.ready(task)) continue;
                    for (const auto& p : pu_ids) {
                        const double f = board.finish_if(task, p);
                        if (f < best_finish) {
                            best_finish = f;
                            best_task = task;
                            best_pu = p;
                        }
                    }
                }
                board.place(best_task, best_pu);
            }
            break;
        case PlanPolicy::mcp: {
            const auto alap = alap_times(dag, pus, comm);
            std::vector<std::string> list = names;
            std::stable_sort(list.begin(), list.end(),
                             [&](const std::string& a, const std::string& b) { return alap.at(a) < alap.at(b); });
            while (!list.empty()) {
                auto it = std::find_if(list.begin(), list.end(), [&](const std::string& t) { return board.ready(t); });
                const std::string task = *it;
                list.erase(it);
                std::string best = pu_ids.front();
                for (const auto& p : pu_ids) {
                    if (board.earliest_start(task, p) < board.earliest_start(task, best)) best = p;
                }
                board.place(task, best);
            }
            break;
        }
        case PlanPolicy::ccf: break;
    }
    return board.take();
}

}  // namespace depsim
