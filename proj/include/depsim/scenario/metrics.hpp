#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace depsim {

struct MetricRow {
    double time = 0.0;
    std::string metric;
    std::string component;
    double value = 0.0;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Counters, time series and fixed-window rate series keyed by
/// (metric name, component id).
class MetricsStore {
public:
    void set_window(double seconds);
    [[nodiscard]] double window() const noexcept { return window_; }

    void add(std::string_view metric, std::string_view component, double delta = 1.0);
    [[nodiscard]] double counter(std::string_view metric, std::string_view component) const;
    /// Sum of a counter over all components.
    [[nodiscard]] double total(std::string_view metric) const;

    /// Appends a point; timestamps must be non-decreasing per series.
    void sample(std::string_view metric, std::string_view component, double time, double value);
    [[nodiscard]] std::vector<std::pair<double, double>> series(std::string_view metric,
                                                               std::string_view component) const;

    /// Adds `amount` to the window containing `time`.
    void add_windowed(std::string_view metric, std::string_view component, double time, double amount);
    /// Dense per-window values for windows starting in [0, horizon).
    [[nodiscard]] std::vector<double> windowed(std::string_view metric, std::string_view component,
                                               double horizon) const;

    /// Export view: counters stamped at `end`, series points, and dense
    /// windowed series, ordered by (time, metric, component).
    [[nodiscard]] std::vector<MetricRow> rows(double end) const;

private:
    using Key = std::pair<std::string, std::string>;

    double window_ = 1.0;
    std::map<Key, double> counters_;
    std::map<Key, std::vector<std::pair<double, double>>> series_;
    std::map<Key, std::map<long long, double>> windowed_;
};

}  // namespace depsim
