#include "depsim/workload/dag.hpp"

#include <map>
#include <queue>
#include <set>

namespace depsim {

const DagTask& Dag::task(const std::string& name) const {
    for (const auto& t : tasks) {
        if (t.name == name) return t;
    }
    throw std::out_of_range("unknown task " + name + " in DAG " + id);
}

std::vector<DagEdge> Dag::inbound(const std::string& name) const {
    std::vector<DagEdge> out;
    for (const auto& e : edges) {
        if (e.child == name) out.push_back(e);
    }
    return out;
}

std::vector<DagEdge> Dag::outbound(const std::string& name) const {
    std::vector<DagEdge> out;
    for (const auto& e : edges) {
        if (e.parent == name) out.push_back(e);
    }
    return out;
}

void validate(const Dag& dag) {
    std::set<std::string> names;
    for (const auto& t : dag.tasks) {
        if (t.name.empty() || !names.insert(t.name).second) {
            throw std::invalid_argument("empty or duplicate task name in DAG " + dag.id);
        }
        if (!(t.work >= 0.0)) {
            throw std::invalid_argument("task work must be >= 0 in DAG " + dag.id);
        }
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : dag.edges) {
        if (!names.contains(e.parent) || !names.contains(e.child)) {
            throw std::invalid_argument("edge " + e.parent + ">" + e.child + " names an unknown task");
        }
        if (!(e.bytes >= 0.0)) {
            throw std::invalid_argument("edge bytes must be >= 0 in DAG " + dag.id);
        }
        if (e.parent == e.child || !seen.emplace(e.parent, e.child).second) {
            if (e.parent == e.child) throw CyclicDag(dag.id);
            throw std::invalid_argument("duplicate edge " + e.parent + ">" + e.child);
        }
    }
    if (topological_order(dag).size() != dag.tasks.size()) {
        throw CyclicDag(dag.id);
    }
}

std::vector<std::string> topological_order(const Dag& dag) {
    std::map<std::string, int> indegree;
    for (const auto& t : dag.tasks) indegree[t.name] = 0;
    for (const auto& e : dag.edges) ++indegree[e.child];
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [name, d] : indegree) {
        if (d == 0) ready.push(name);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        const std::string u = ready.top();
        ready.pop();
        order.push_back(u);
        for (const auto& e : dag.edges) {
            if (e.parent == u && --indegree[e.child] == 0) ready.push(e.child);
        }
    }
    return order;
}

}  // namespace depsim
