#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/engine/engine.hpp"

namespace depsim {

class BadPattern : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class ArrivalKind { batch, poisson, dos_attack };

std::string_view to_string(ArrivalKind kind) noexcept;
ArrivalKind parse_arrival_kind(std::string_view text);

struct ArrivalPattern {
    ArrivalKind kind = ArrivalKind::batch;
    /// Arrivals per second (poisson and dos-attack).
    double rate = 0.0;
    /// Maximum number of arrivals; negative means unbounded (poisson only).
    long long count = 1;
    SimTime start = 0.0;
    SimTime end = 0.0;

    friend bool operator==(const ArrivalPattern&, const ArrivalPattern&) = default;
};

/// Throws BadPattern.
void validate(const ArrivalPattern& pattern);

/// Arrival instants of a batch or poisson pattern; poisson gaps are
/// exponential with mean 1/rate and arrivals stay within [start, end].
[[nodiscard]] std::vector<SimTime> arrival_times(const ArrivalPattern& pattern, SeededRng& rng);

/// Process that calls `submit(index)` at each arrival instant.
Process generate(Engine& engine, ArrivalPattern pattern, SeededRng rng, std::function<void(long long)> submit);

}  // namespace depsim
