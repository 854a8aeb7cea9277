#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/workload/dag.hpp"

namespace depsim {

enum class PlanPolicy { baseline, etf, mcp, ccf };

std::string_view to_string(PlanPolicy policy) noexcept;
PlanPolicy parse_plan_policy(std::string_view text);

class NoPus : public std::invalid_argument {
public:
    NoPus() : std::invalid_argument("no operational processing units to plan on") {}
};

class UnsupportedPolicy : public std::runtime_error {
public:
    explicit UnsupportedPolicy(std::string_view name)
        : std::runtime_error("scheduling policy not implemented: " + std::string(name)) {}
};

struct PlanPu {
    std::string id;
    double power = 1.0;
    int slots = 1;
};

/// Estimated seconds to move `bytes` between two PUs; 0 for the same PU.
using CommEstimator = std::function<double(const std::string& from, const std::string& to, double bytes)>;

struct Assignment {
    std::string pu;
    double start = 0.0;
    double finish = 0.0;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct Schedule {
    std::map<std::string, Assignment> assignments;

    [[nodiscard]] double makespan() const;
    friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Static list scheduling of a DAG on a PU set.
///
/// baseline: topological order, PU with the fewest tasks so far.
/// etf: repeatedly the (ready task, PU) pair with the earliest finish.
/// mcp: ascending latest start time from the critical path, each task on the
///      PU where it can start earliest.
/// Ties go to the lexicographically smaller task, then PU. Throws NoPus,
/// CyclicDag, or UnsupportedPolicy for ccf.
[[nodiscard]] Schedule plan_dag(const Dag& dag, const std::vector<PlanPu>& pus, PlanPolicy policy,
                                const CommEstimator& comm);

/// Latest start times used as MCP priorities.
[[nodiscard]] std::map<std::string, double> alap_times(const Dag& dag, const std::vector<PlanPu>& pus,
                                                       const CommEstimator& comm);

}  // namespace depsim
