#include "depsim/engine/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace depsim {

namespace {

// Fields never contain the CSV delimiter or line breaks.
std::string sanitize(std::string_view text) {
    std::string out(text);
    std::replace(out.begin(), out.end(), ',', ';');
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

}  // namespace

std::string format_real(double value) {
    if (value == 0.0) {
        value = 0.0;  // fold -0
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%#.9g", value);
    return buf;
}

void Trace::append(TraceRow row) {
    if (!enabled_) {
        return;
    }
    row.kind = sanitize(row.kind);
    row.source = sanitize(row.source);
    row.target = sanitize(row.target);
    row.info = sanitize(row.info);
    rows_.push_back(std::move(row));
}

std::vector<TraceRow> Trace::select(std::string_view kind) const {
    std::vector<TraceRow> out;
    for (const auto& r : rows_) {
        if (r.kind == kind) {
            out.push_back(r);
        }
    }
    return out;
}

std::size_t Trace::count(std::string_view kind) const {
    return static_cast<std::size_t>(
        std::count_if(rows_.begin(), rows_.end(), [&](const TraceRow& r) { return r.kind == kind; }));
}

void Trace::write_csv(std::ostream& out) const {
    out << kHeader << '\n';
    for (const auto& r : rows_) {
        out << r.seq << ',' << format_real(r.time) << ',' << r.kind << ',' << r.source << ','
            << r.target << ',' << r.info << '\n';
    }
}

std::string Trace::to_csv() const {
    std::ostringstream out;
    write_csv(out);
    return out.str();
}

std::string info_field(std::string_view info, std::string_view key) {
    std::size_t pos = 0;
    while (pos <= info.size()) {
        std::size_t end = info.find(';', pos);
        if (end == std::string_view::npos) {
            end = info.size();
        }
        std::string_view item = info.substr(pos, end - pos);
        const auto eq = item.find('=');
        if (eq != std::string_view::npos && item.substr(0, eq) == key) {
            return std::string(item.substr(eq + 1));
        }
        pos = end + 1;
    }
    return {};
}

}  // namespace depsim
