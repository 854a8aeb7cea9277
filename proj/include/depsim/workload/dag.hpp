#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace depsim {

class CyclicDag : public std::invalid_argument {
public:
    explicit CyclicDag(const std::string& dag) : std::invalid_argument("dependency cycle in DAG " + dag) {}
};

struct DagTask {
    std::string name;
    double work = 0.0;
};

struct DagEdge {
    std::string parent;
    std::string child;
    /// Bytes sent from parent to child before the child may start.
    double bytes = 0.0;
};

struct Dag {
    std::string id;
    std::vector<DagTask> tasks;
    std::vector<DagEdge> edges;

    [[nodiscard]] const DagTask& task(const std::string& name) const;
    [[nodiscard]] std::vector<DagEdge> inbound(const std::string& name) const;
    [[nodiscard]] std::vector<DagEdge> outbound(const std::string& name) const;
};

/// Throws CyclicDag, or invalid_argument for unknown or duplicate tasks.
void validate(const Dag& dag);

/// Kahn's order, smallest ready name first.
[[nodiscard]] std::vector<std::string> topological_order(const Dag& dag);

}  // namespace depsim
