#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace depsim {

/// Raised when a distribution is built with parameters outside its domain.
class BadParams : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Deterministic 64-bit generator with keyed substreams.
///
/// Only the raw std::mt19937_64 output (fully specified by the standard) is
/// consumed; every variate is derived from it by code in this library, so
/// sample streams are identical across standard library implementations.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01();

    /// Uniform integer on [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Independent stream for a stable key (component id, activity name...).
    [[nodiscard]] SeededRng derive(std::string_view key) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

enum class Family { exponential, gaussian, uniform, binomial, poisson };

std::string_view to_string(Family family) noexcept;
std::optional<Family> parse_family(std::string_view name) noexcept;

/// A parameterized probability distribution.
///
/// Parameter meaning per family:
///   exponential: first = mean
///   gaussian:    first = mean, second = standard deviation
///   uniform:     first = lower bound, second = upper bound
///   binomial:    first = trials (integral), second = success probability
///   poisson:     first = lambda
struct Distribution {
    Family family = Family::exponential;
    double first = 1.0;
    double second = 0.0;

    static Distribution exponential(double mean);
    static Distribution gaussian(double mean, double sigma);
    static Distribution uniform(double lo, double hi);
    static Distribution binomial(double trials, double p);
    static Distribution poisson(double lambda);

    /// Distribution of the given family whose mean equals `mean`.
    /// `spread` is the gaussian standard deviation and is ignored elsewhere.
    /// Uniform spans [0, 2*mean], binomial uses p = 1/2 with round(2*mean) trials.
    static Distribution with_mean(Family family, double mean, double spread = 0.0);

    void validate() const;
    [[nodiscard]] double mean() const;

    friend bool operator==(const Distribution&, const Distribution&) = default;
};

/// Draws one variate. Throws BadParams when the parameters are invalid.
double sample(SeededRng& rng, const Distribution& dist);

/// Draws until a strictly positive value appears (truncation at zero).
/// Falls back to the distribution mean after a bounded number of attempts.
double sample_positive(SeededRng& rng, const Distribution& dist);

}  // namespace depsim
