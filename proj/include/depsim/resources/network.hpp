#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/engine/engine.hpp"
#include "depsim/resources/topology.hpp"

namespace depsim {

using TransferId = std::uint64_t;

enum class TransferStatus { active, blocked, delivering, delivered, failed };

std::string_view to_string(TransferStatus status) noexcept;

struct Transfer {
    TransferId id = 0;
    std::string name;
    std::string src;
    std::string dst;
    double total_bytes = 0.0;
    double remaining_bytes = 0.0;
    std::vector<std::string> path;
    double rate_bps = 0.0;
    int retries_used = 0;
    TransferStatus status = TransferStatus::active;
    SimTime started = 0.0;
    SimTime finished = 0.0;
    double lost_bytes = 0.0;
    double extra_delay = 0.0;
    int duplicates = 0;

    // Bookkeeping for lazy progress and the current retransmission round.
    SimTime last_update = 0.0;
    double round_bytes = 0.0;
    EventId pending_event = 0;
};

struct NetworkStats {
    std::uint64_t started = 0;
    std::uint64_t delivered = 0;
    std::uint64_t failed = 0;
    double requested_bytes = 0.0;
    double delivered_bytes = 0.0;
    double lost_bytes = 0.0;
    double total_transfer_time = 0.0;
    std::uint64_t duplicates = 0;

    [[nodiscard]] double mean_transfer_time() const noexcept {
        return delivered == 0 ? 0.0 : total_transfer_time / static_cast<double>(delivered);
    }
};

/// Flow-level network with per-link equal sharing.
///
/// A flow's rate is the minimum over its path of capacity / active flows.
/// Progress is tracked lazily and only flows whose rate changes get a new
/// drain event. Once drained a flow leaves its links and is delivered after
/// the path latency plus any timing-fault delay.
///
/// Omission: a lossy link discards a fraction of each crossing flow's
/// unacknowledged bytes, both when the fault strikes and at every drain while
/// the fault lasts; lost bytes are re-sent, each loss counting one retry.
class Network {
public:
    using Callback = std::function<void(const Transfer&)>;

    Network(Engine& engine, Topology& topology, ComponentRegistry& registry);

    /// Retries before a transfer fails; negative means unlimited.
    void set_max_retries(int max_retries) noexcept { max_retries_ = max_retries; }
    [[nodiscard]] int max_retries() const noexcept { return max_retries_; }

    /// Throws NoRoute (after counting the bytes as requested and lost).
    TransferId start_transfer(const std::string& src, const std::string& dst, double bytes,
                              Callback on_done = {});

    /// Abandons a live transfer; its undelivered bytes count as lost and the
    /// completion callback is not run. Returns false if it already ended.
    bool cancel(TransferId id, const std::string& reason);

    [[nodiscard]] const Transfer& transfer(TransferId id) const;
    [[nodiscard]] std::vector<TransferId> flows_on(std::string_view link) const;
    /// Sum of current flow rates on a link (bits/s).
    [[nodiscard]] double allocated(std::string_view link) const;
    [[nodiscard]] const NetworkStats& stats() const noexcept { return stats_; }
    [[nodiscard]] std::size_t active_count() const noexcept;

    // Fault hooks. The registry state is updated by the caller first.
    void omission(const std::string& link, double fraction);
    void clear_omission(const std::string& link);
    /// Reroutes, blocks or fails every flow crossing a crashed link or router.
    void component_down(const std::string& component);
    /// Retries blocked flows after a recovery.
    void component_up(const std::string& component);
    /// Postpones the termination of every flow crossing the component.
    void delay_flows(const std::string& component, double seconds);
    /// The next delivery over the link is duplicated.
    void duplicate_next(const std::string& link);

private:
    Transfer& get(TransferId id);
    void advance(Transfer& t);
    void attach(Transfer& t);
    void detach(Transfer& t, std::set<std::string>& touched);
    void recompute(const std::set<std::string>& links);
    double fair_rate(const Transfer& t) const;
    void schedule_drain(Transfer& t);
    void on_drain(TransferId id);
    void schedule_delivery(Transfer& t);
    void on_delivered(TransferId id);
    /// Applies a loss; returns false when the transfer failed as a result.
    bool lose(Transfer& t, double fraction, const std::string& where);
    void fail(Transfer& t, const std::string& reason, std::set<std::string>& touched);
    double path_loss(const Transfer& t) const;
    /// Runs completion callbacks of transfers failed during the current call.
    void flush_failures();

    Engine& engine_;
    Topology& topology_;
    ComponentRegistry& registry_;
    int max_retries_ = 10;
    TransferId next_id_ = 1;
    std::map<TransferId, Transfer> transfers_;
    std::map<TransferId, Callback> callbacks_;
    std::map<std::string, std::set<TransferId>, std::less<>> on_link_;
    std::set<std::string, std::less<>> duplicate_armed_;
    std::vector<TransferId> failed_;
    NetworkStats stats_;
};

}  // namespace depsim
