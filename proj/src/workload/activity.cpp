#include "depsim/workload/activity.hpp"

#include <cmath>

namespace depsim {

std::string_view to_string(ArrivalKind kind) noexcept {
    switch (kind) {
        case ArrivalKind::batch: return "batch";
        case ArrivalKind::poisson: return "poisson";
        case ArrivalKind::dos_attack: return "dos-attack";
    }
    return "?";
}

ArrivalKind parse_arrival_kind(std::string_view text) {
    if (text == "batch") return ArrivalKind::batch;
    if (text == "poisson") return ArrivalKind::poisson;
    if (text == "dos-attack") return ArrivalKind::dos_attack;
    throw BadPattern("unknown arrival kind: " + std::string(text));
}

void validate(const ArrivalPattern& p) {
    if (!(p.start >= 0.0) || !std::isfinite(p.start)) {
        throw BadPattern("arrival start must be finite and >= 0");
    }
    if (p.kind == ArrivalKind::batch) {
        if (p.count < 0) throw BadPattern("batch count must be >= 0");
        return;
    }
    if (!(p.rate >= 0.0) || !std::isfinite(p.rate)) {
        throw BadPattern("arrival rate must be finite and >= 0");
    }
    if (!(p.end >= p.start)) {
        throw BadPattern("arrival window end must not precede start");
    }
}

std::vector<SimTime> arrival_times(const ArrivalPattern& p, SeededRng& rng) {
    validate(p);
    std::vector<SimTime> out;
    if (p.kind == ArrivalKind::batch) {
        out.assign(static_cast<std::size_t>(p.count), p.start);
        return out;
    }
    if (p.rate == 0.0) {
        return out;
    }
    const Distribution gap = Distribution::exponential(1.0 / p.rate);
    SimTime t = p.start;
    while (p.count < 0 || static_cast<long long>(out.size()) < p.count) {
        t += sample(rng, gap);
        if (t > p.end) break;
        out.push_back(t);
    }
    return out;
}

Process generate(Engine& engine, ArrivalPattern pattern, SeededRng rng, std::function<void(long long)> submit) {
    const auto times = arrival_times(pattern, rng);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double wait = times[i] - engine.now();
        if (wait > 0.0) {
            const Wake w = co_await engine.delay(wait);
            if (w.interrupted) co_return;
        }
        submit(static_cast<long long>(i));
    }
}

}  // namespace depsim
