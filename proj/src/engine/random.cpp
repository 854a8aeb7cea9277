#include "depsim/engine/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace depsim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::below(std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("SeededRng::below: empty range");
    }
    // Rejection keeps the result unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return x % n;
}

SeededRng SeededRng::derive(std::string_view key) const {
    return SeededRng(splitmix64(seed_ ^ fnv1a64(key)));
}

std::string_view to_string(Family family) noexcept {
    switch (family) {
        case Family::exponential: return "exponential";
        case Family::gaussian: return "gaussian";
        case Family::uniform: return "uniform";
        case Family::binomial: return "binomial";
        case Family::poisson: return "poisson";
    }
    return "?";
}

std::optional<Family> parse_family(std::string_view name) noexcept {
    for (Family f : {Family::exponential, Family::gaussian, Family::uniform, Family::binomial,
                     Family::poisson}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

Distribution Distribution::exponential(double mean) { return {Family::exponential, mean, 0.0}; }
Distribution Distribution::gaussian(double mean, double sigma) { return {Family::gaussian, mean, sigma}; }
Distribution Distribution::uniform(double lo, double hi) { return {Family::uniform, lo, hi}; }
Distribution Distribution::binomial(double trials, double p) { return {Family::binomial, trials, p}; }
Distribution Distribution::poisson(double lambda) { return {Family::poisson, lambda, 0.0}; }

Distribution Distribution::with_mean(Family family, double mean, double spread) {
    switch (family) {
        case Family::exponential: return exponential(mean);
        case Family::gaussian: return gaussian(mean, spread);
        case Family::uniform: return uniform(0.0, 2.0 * mean);
        case Family::binomial: return binomial(std::round(2.0 * mean), 0.5);
        case Family::poisson: return poisson(mean);
    }
    return exponential(mean);
}

void Distribution::validate() const {
    auto fail = [this](const char* what) {
        throw BadParams(std::string(to_string(family)) + ": " + what);
    };
    if (!std::isfinite(first) || !std::isfinite(second)) {
        fail("parameters must be finite");
    }
    switch (family) {
        case Family::exponential:
            if (first <= 0.0) fail("mean must be > 0");
            break;
        case Family::gaussian:
            if (second < 0.0) fail("sigma must be >= 0");
            break;
        case Family::uniform:
            if (first > second) fail("lower bound exceeds upper bound");
            break;
        case Family::binomial:
            if (first < 0.0 || first != std::floor(first)) fail("trials must be a non-negative integer");
            if (second < 0.0 || second > 1.0) fail("p must lie in [0, 1]");
            break;
        case Family::poisson:
            if (first < 0.0) fail("lambda must be >= 0");
            break;
    }
}

double Distribution::mean() const {
    switch (family) {
        case Family::exponential: return first;
        case Family::gaussian: return first;
        case Family::uniform: return 0.5 * (first + second);
        case Family::binomial: return first * second;
        case Family::poisson: return first;
    }
    return first;
}

namespace {

// Inversion that enumerates the support outward from the mode, alternating
// below and above. Any fixed enumeration order yields an exact sampler; starting
// at the mode keeps the walk O(sigma) and avoids underflow of pmf(0).
template <typename LogPmf>
double sample_discrete_from_mode(SeededRng& rng, long mode, long lo, long hi, LogPmf log_pmf) {
    const double u = rng.uniform01();
    double acc = std::exp(log_pmf(mode));
    if (u < acc) {
        return static_cast<double>(mode);
    }
    long down = mode - 1;
    long up = mode + 1;
    while (down >= lo || up <= hi) {
        double step = 0.0;
        if (down >= lo) {
            const double term = std::exp(log_pmf(down));
            acc += term;
            step += term;
            if (u < acc) return static_cast<double>(down);
            --down;
        }
        if (up <= hi) {
            const double term = std::exp(log_pmf(up));
            acc += term;
            step += term;
            if (u < acc) return static_cast<double>(up);
            ++up;
        }
        if (step == 0.0) {
            break;  // both tails underflowed
        }
    }
    // Rounding left a sliver of mass unassigned; attribute it to the mode.
    return static_cast<double>(mode);
}

}  // namespace

double sample(SeededRng& rng, const Distribution& dist) {
    dist.validate();
    switch (dist.family) {
        case Family::exponential:
            return -dist.first * std::log1p(-rng.uniform01());
        case Family::uniform:
            return dist.first + (dist.second - dist.first) * rng.uniform01();
        case Family::gaussian: {
            // Box-Muller, one variate per call.
            const double u1 = 1.0 - rng.uniform01();
            const double u2 = rng.uniform01();
            const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
            return dist.first + dist.second * z;
        }
        case Family::binomial: {
            const long n = static_cast<long>(dist.first);
            const double p = dist.second;
            if (n == 0 || p == 0.0) return 0.0;
            if (p == 1.0) return static_cast<double>(n);
            const long mode = std::min(n, static_cast<long>(std::floor((n + 1) * p)));
            const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
            const double lp = std::log(p);
            const double lq = std::log1p(-p);
            return sample_discrete_from_mode(rng, mode, 0, n, [&](long k) {
                return lg_n1 - std::lgamma(k + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) +
                       k * lp + (n - k) * lq;
            });
        }
        case Family::poisson: {
            const double lambda = dist.first;
            if (lambda == 0.0) return 0.0;
            const long mode = static_cast<long>(std::floor(lambda));
            const double ll = std::log(lambda);
            return sample_discrete_from_mode(rng, mode, 0, std::numeric_limits<long>::max() - 1,
                                             [&](long k) { return k * ll - lambda - std::lgamma(k + 1.0); });
        }
    }
    return 0.0;
}

double sample_positive(SeededRng& rng, const Distribution& dist) {
    constexpr int kAttempts = 64;
    for (int i = 0; i < kAttempts; ++i) {
        const double x = sample(rng, dist);
        if (x > 0.0) {
            return x;
        }
    }
    return dist.mean() > 0.0 ? dist.mean() : 1.0;
}

}  // namespace depsim
