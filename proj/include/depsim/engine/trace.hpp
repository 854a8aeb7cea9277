#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace depsim {

/// One row of the execution trace.
///
/// `seq` is the sequence number of the event during whose execution the row
/// was written (0 for rows written outside any event).
struct TraceRow {
    std::uint64_t seq = 0;
    double time = 0.0;
    std::string kind;
    std::string source;
    std::string target;
    std::string info;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Formats a real with exactly nine significant digits (`%#.9g`).
std::string format_real(double value);

/// Append-only execution trace, exported as `seq,time,kind,source,target,info`.
class Trace {
public:
    static constexpr std::string_view kHeader = "seq,time,kind,source,target,info";

    void append(TraceRow row);

    [[nodiscard]] const std::vector<TraceRow>& rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
    void clear() noexcept { rows_.clear(); }

    void set_enabled(bool enabled) noexcept { enabled_ = enabled; }
    [[nodiscard]] bool enabled() const noexcept { return enabled_; }

    /// Rows whose kind equals `kind`.
    [[nodiscard]] std::vector<TraceRow> select(std::string_view kind) const;
    [[nodiscard]] std::size_t count(std::string_view kind) const;

    void write_csv(std::ostream& out) const;
    [[nodiscard]] std::string to_csv() const;

private:
    std::vector<TraceRow> rows_;
    bool enabled_ = true;
};

/// Extracts `value` from an info string of the form `a=1;key=value;...`.
std::string info_field(std::string_view info, std::string_view key);

}  // namespace depsim
