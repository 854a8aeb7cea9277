#include "depsim/scenario/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace depsim {

void MetricsStore::set_window(double seconds) {
    if (!(seconds > 0.0)) {
        throw std::invalid_argument("metric window must be > 0");
    }
    window_ = seconds;
}

void MetricsStore::add(std::string_view metric, std::string_view component, double delta) {
    counters_[Key{metric, component}] += delta;
}

double MetricsStore::counter(std::string_view metric, std::string_view component) const {
    auto it = counters_.find(Key{metric, component});
    return it == counters_.end() ? 0.0 : it->second;
}

double MetricsStore::total(std::string_view metric) const {
    double sum = 0.0;
    for (const auto& [key, value] : counters_) {
        if (key.first == metric) {
            sum += value;
        }
    }
    return sum;
}

void MetricsStore::sample(std::string_view metric, std::string_view component, double time, double value) {
    auto& points = series_[Key{metric, component}];
    if (!points.empty() && time < points.back().first) {
        throw std::logic_error("series timestamps must be non-decreasing: " + std::string(metric));
    }
    points.emplace_back(time, value);
}

std::vector<std::pair<double, double>> MetricsStore::series(std::string_view metric,
                                                            std::string_view component) const {
    auto it = series_.find(Key{metric, component});
    return it == series_.end() ? std::vector<std::pair<double, double>>{} : it->second;
}

void MetricsStore::add_windowed(std::string_view metric, std::string_view component, double time,
                                double amount) {
    const auto index = static_cast<long long>(std::floor(time / window_));
    windowed_[Key{metric, component}][index] += amount;
}

std::vector<double> MetricsStore::windowed(std::string_view metric, std::string_view component,
                                           double horizon) const {
    const auto count = static_cast<long long>(std::ceil(horizon / window_));
    std::vector<double> out(static_cast<std::size_t>(std::max(0LL, count)), 0.0);
    auto it = windowed_.find(Key{metric, component});
    if (it != windowed_.end()) {
        for (const auto& [index, value] : it->second) {
            if (index >= 0 && index < count) {
                out[static_cast<std::size_t>(index)] = value;
            }
        }
    }
    return out;
}

std::vector<MetricRow> MetricsStore::rows(double end) const {
    std::vector<MetricRow> out;
    for (const auto& [key, value] : counters_) {
        out.push_back(MetricRow{end, key.first, key.second, value});
    }
    for (const auto& [key, points] : series_) {
        for (const auto& [t, v] : points) {
            out.push_back(MetricRow{t, key.first, key.second, v});
        }
    }
    for (const auto& [key, windows] : windowed_) {
        const auto dense = windowed(key.first, key.second, end);
        for (std::size_t i = 0; i < dense.size(); ++i) {
            out.push_back(MetricRow{static_cast<double>(i) * window_, key.first, key.second, dense[i]});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const MetricRow& a, const MetricRow& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.metric != b.metric) return a.metric < b.metric;
        return a.component < b.component;
    });
    return out;
}

}  // namespace depsim
