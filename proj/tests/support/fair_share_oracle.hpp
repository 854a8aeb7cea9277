#pragma once

// Reference computation of fair-share transfer completion times.
//
// Piecewise-constant rates: between consecutive flow arrivals and drains every
// active flow moves at min over its links of capacity / flows on that link.
// Written from scratch so it shares no code with the simulator.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct Flow {
    double start = 0.0;
    double bytes = 0.0;
    std::vector<std::string> links;
    double latency = 0.0;
};

inline std::vector<double> completion_times(const std::vector<Flow>& flows,
                                            const std::map<std::string, double>& capacity_bps) {
    const std::size_t n = flows.size();
    std::vector<double> left(n), done(n, -1.0);
    std::vector<bool> active(n, false), drained(n, false);
    for (std::size_t i = 0; i < n; ++i) left[i] = flows[i].bytes * 8.0;  // bits
    double now = 0.0;
    for (;;) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i] && !drained[i] && flows[i].start <= now) active[i] = true;
        }
        std::map<std::string, int> count;
        for (std::size_t i = 0; i < n; ++i) {
            if (active[i]) for (const auto& l : flows[i].links) ++count[l];
        }
        std::vector<double> rate(n, 0.0);
        double next = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            double r = std::numeric_limits<double>::infinity();
            for (const auto& l : flows[i].links) r = std::min(r, capacity_bps.at(l) / count[l]);
            rate[i] = r;
            next = std::min(next, left[i] <= 0.0 ? now : now + left[i] / r);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i] && !drained[i]) next = std::min(next, flows[i].start);
        }
        if (next == std::numeric_limits<double>::infinity()) break;
        const double dt = next - now;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            const bool finishes = left[i] <= 0.0 || now + left[i] / rate[i] == next;
            left[i] -= dt * rate[i];
            if (finishes) {
                active[i] = false;
                drained[i] = true;
                done[i] = next + flows[i].latency;
            }
        }
        now = next;
    }
    return done;
}

}  // namespace oracle
