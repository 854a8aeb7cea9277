#include "depsim/resources/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depsim {

namespace {

std::string fmt(double v) { return format_real(v); }

}  // namespace

std::string_view to_string(TransferStatus status) noexcept {
    switch (status) {
        case TransferStatus::active: return "active";
        case TransferStatus::blocked: return "blocked";
        case TransferStatus::delivering: return "delivering";
        case TransferStatus::delivered: return "delivered";
        case TransferStatus::failed: return "failed";
    }
    return "?";
}

Network::Network(Engine& engine, Topology& topology, ComponentRegistry& registry)
    : engine_(engine), topology_(topology), registry_(registry) {}

TransferId Network::start_transfer(const std::string& src, const std::string& dst, double bytes,
                                   Callback on_done) {
    if (!(bytes >= 0.0) || !std::isfinite(bytes)) {
        throw std::invalid_argument("transfer size must be a finite non-negative byte count");
    }
    std::vector<std::string> path;
    try {
        path = topology_.route(src, dst);
    } catch (const NoRoute&) {
        ++stats_.started;
        ++stats_.failed;
        stats_.requested_bytes += bytes;
        stats_.lost_bytes += bytes;
        engine_.record("transfer-fail", "network", src + ">" + dst, "reason=no-route;lost=" + fmt(bytes));
        throw;
    }

    const TransferId id = next_id_++;
    Transfer t;
    t.id = id;
    t.name = "tx" + std::to_string(id);
    t.src = src;
    t.dst = dst;
    t.total_bytes = bytes;
    t.remaining_bytes = bytes;
    t.round_bytes = bytes;
    t.path = std::move(path);
    t.started = engine_.now();
    t.last_update = engine_.now();
    auto& stored = transfers_.emplace(id, std::move(t)).first->second;
    if (on_done) {
        callbacks_.emplace(id, std::move(on_done));
    }
    ++stats_.started;
    stats_.requested_bytes += bytes;
    engine_.record("transfer-start", "network", stored.name,
                   "src=" + src + ";dst=" + dst + ";bytes=" + fmt(bytes) +
                       ";hops=" + std::to_string(stored.path.size()));

    attach(stored);
    recompute(std::set<std::string>(stored.path.begin(), stored.path.end()));
    if (stored.pending_event == 0) {
        stored.rate_bps = fair_rate(stored);
        schedule_drain(stored);
    }
    return id;
}

const Transfer& Network::transfer(TransferId id) const {
    auto it = transfers_.find(id);
    if (it == transfers_.end()) {
        throw std::out_of_range("unknown transfer " + std::to_string(id));
    }
    return it->second;
}

Transfer& Network::get(TransferId id) { return const_cast<Transfer&>(std::as_const(*this).transfer(id)); }

std::vector<TransferId> Network::flows_on(std::string_view link) const {
    auto it = on_link_.find(link);
    if (it == on_link_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

double Network::allocated(std::string_view link) const {
    double sum = 0.0;
    for (TransferId id : flows_on(link)) {
        sum += transfer(id).rate_bps;
    }
    return sum;
}

std::size_t Network::active_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(transfers_.begin(), transfers_.end(), [](const auto& kv) {
        const auto s = kv.second.status;
        return s == TransferStatus::active || s == TransferStatus::blocked || s == TransferStatus::delivering;
    }));
}

void Network::advance(Transfer& t) {
    const double dt = engine_.now() - t.last_update;
    if (dt > 0.0 && t.rate_bps > 0.0) {
        if (std::isinf(t.rate_bps)) {
            t.remaining_bytes = 0.0;
        } else {
            t.remaining_bytes = std::max(0.0, t.remaining_bytes - dt * t.rate_bps / 8.0);
        }
    }
    t.last_update = engine_.now();
}

void Network::attach(Transfer& t) {
    for (const auto& l : t.path) {
        on_link_[l].insert(t.id);
    }
}

void Network::detach(Transfer& t, std::set<std::string>& touched) {
    for (const auto& l : t.path) {
        auto it = on_link_.find(l);
        if (it != on_link_.end()) {
            it->second.erase(t.id);
        }
        touched.insert(l);
    }
}

double Network::fair_rate(const Transfer& t) const {
    double rate = std::numeric_limits<double>::infinity();
    for (const auto& l : t.path) {
        auto it = on_link_.find(l);
        const auto n = it == on_link_.end() ? 0 : it->second.size();
        rate = std::min(rate, topology_.link(l).spec.capacity_bps / static_cast<double>(std::max<std::size_t>(n, 1)));
    }
    return rate;
}

void Network::recompute(const std::set<std::string>& links) {
    std::set<TransferId> affected;
    for (const auto& l : links) {
        auto it = on_link_.find(l);
        if (it != on_link_.end()) {
            affected.insert(it->second.begin(), it->second.end());
        }
    }
    for (TransferId id : affected) {
        Transfer& t = get(id);
        const double rate = fair_rate(t);
        if (rate != t.rate_bps || t.pending_event == 0) {
            advance(t);
            t.rate_bps = rate;
            schedule_drain(t);
        }
    }
}

void Network::schedule_drain(Transfer& t) {
    if (t.pending_event != 0) {
        engine_.cancel(t.pending_event);
    }
    double dt = 0.0;
    if (t.remaining_bytes > 0.0 && !std::isinf(t.rate_bps)) {
        dt = t.remaining_bytes * 8.0 / t.rate_bps;
    }
    const TransferId id = t.id;
    t.pending_event = engine_.schedule_after(dt, EventSpec{EventKind::completion, "", "network", t.name, ""},
                                             [this, id] { on_drain(id); });
}

double Network::path_loss(const Transfer& t) const {
    double keep = 1.0;
    for (const auto& l : t.path) {
        keep *= 1.0 - topology_.link(l).loss_fraction;
    }
    return 1.0 - keep;
}

void Network::on_drain(TransferId id) {
    Transfer& t = get(id);
    t.pending_event = 0;
    advance(t);
    t.remaining_bytes = 0.0;
    const double loss = path_loss(t);
    if (std::floor(loss * t.round_bytes) > 0.0) {
        if (lose(t, loss, "drain")) {
            schedule_drain(t);
        }
        flush_failures();
        return;
    }
    std::set<std::string> touched;
    detach(t, touched);
    t.status = TransferStatus::delivering;
    t.rate_bps = 0.0;
    recompute(touched);
    schedule_delivery(t);
}

void Network::schedule_delivery(Transfer& t) {
    const TransferId id = t.id;
    const double wait = topology_.latency(t.path) + t.extra_delay;
    t.pending_event = engine_.schedule_after(
        wait,
        EventSpec{EventKind::completion, "transfer-end", "network", t.name,
                  "src=" + t.src + ";dst=" + t.dst + ";bytes=" + fmt(t.total_bytes)},
        [this, id] { on_delivered(id); });
}

void Network::on_delivered(TransferId id) {
    Transfer& t = get(id);
    t.pending_event = 0;
    t.status = TransferStatus::delivered;
    t.finished = engine_.now();
    ++stats_.delivered;
    stats_.delivered_bytes += t.total_bytes;
    stats_.total_transfer_time += t.finished - t.started;
    bool duplicated = false;
    for (const auto& l : t.path) {
        duplicated = duplicate_armed_.erase(l) > 0 || duplicated;
    }
    if (duplicated) {
        ++t.duplicates;
        ++stats_.duplicates;
        engine_.record("duplicate", "network", t.name, "bytes=" + fmt(t.total_bytes));
    }
    auto cb = callbacks_.extract(id);
    if (!cb.empty()) {
        cb.mapped()(t);
    }
}

bool Network::lose(Transfer& t, double fraction, const std::string& where) {
    const double in_flight = std::max(0.0, t.round_bytes - t.remaining_bytes);
    // Whole bytes only: a round with less than one byte at stake loses nothing.
    const double lost = std::floor(fraction * in_flight);
    if (!(lost > 0.0)) {
        return true;
    }
    t.lost_bytes += lost;
    stats_.lost_bytes += lost;
    ++t.retries_used;
    engine_.record("transfer-loss", "network", t.name,
                   "lost=" + fmt(lost) + ";at=" + where + ";retry=" + std::to_string(t.retries_used));
    if (max_retries_ >= 0 && t.retries_used > max_retries_) {
        std::set<std::string> touched;
        fail(t, "retries-exhausted", touched);
        recompute(touched);
        return false;
    }
    t.remaining_bytes += lost;
    t.round_bytes = t.remaining_bytes;
    return true;
}

void Network::fail(Transfer& t, const std::string& reason, std::set<std::string>& touched) {
    if (t.pending_event != 0) {
        engine_.cancel(t.pending_event);
        t.pending_event = 0;
    }
    if (t.status == TransferStatus::active) {
        detach(t, touched);
    }
    t.status = TransferStatus::failed;
    t.rate_bps = 0.0;
    t.finished = engine_.now();
    ++stats_.failed;
    stats_.lost_bytes += t.remaining_bytes;
    t.lost_bytes += t.remaining_bytes;
    engine_.record("transfer-fail", "network", t.name, "reason=" + reason + ";lost=" + fmt(t.remaining_bytes));
    failed_.push_back(t.id);
}

void Network::flush_failures() {
    auto ids = std::move(failed_);
    failed_.clear();
    for (TransferId id : ids) {
        auto cb = callbacks_.extract(id);
        if (!cb.empty()) {
            cb.mapped()(get(id));
        }
    }
}

bool Network::cancel(TransferId id, const std::string& reason) {
    Transfer& t = get(id);
    if (t.status == TransferStatus::delivered || t.status == TransferStatus::failed) {
        return false;
    }
    if (t.status == TransferStatus::active) {
        advance(t);
    }
    callbacks_.erase(id);
    std::set<std::string> touched;
    fail(t, reason, touched);
    recompute(touched);
    flush_failures();
    return true;
}

void Network::omission(const std::string& link, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw std::invalid_argument("loss fraction must lie in (0,1]");
    }
    topology_.link(link).loss_fraction = fraction;
    for (TransferId id : flows_on(link)) {
        Transfer& t = get(id);
        advance(t);
        if (lose(t, fraction, link)) {
            schedule_drain(t);
        }
    }
    flush_failures();
}

void Network::clear_omission(const std::string& link) { topology_.link(link).loss_fraction = 0.0; }

void Network::component_down(const std::string& component) {
    std::vector<TransferId> crossing;
    std::vector<TransferId> blocked;
    for (auto& [id, t] : transfers_) {
        if (t.status == TransferStatus::active && topology_.traverses(t.path, component)) {
            crossing.push_back(id);
        } else if (t.status == TransferStatus::blocked) {
            blocked.push_back(id);
        }
    }
    std::set<std::string> touched;
    for (TransferId id : crossing) {
        Transfer& t = get(id);
        advance(t);
        detach(t, touched);
    }
    for (TransferId id : crossing) {
        Transfer& t = get(id);
        try {
            t.path = topology_.route(t.src, t.dst);
            attach(t);
            touched.insert(t.path.begin(), t.path.end());
            engine_.record("transfer-reroute", "network", t.name, "hops=" + std::to_string(t.path.size()));
        } catch (const NoRoute&) {
            if (topology_.eventually_routable(t.src, t.dst)) {
                if (t.pending_event != 0) {
                    engine_.cancel(t.pending_event);
                    t.pending_event = 0;
                }
                t.status = TransferStatus::blocked;
                t.rate_bps = 0.0;
                engine_.record("transfer-blocked", "network", t.name, "at=" + component);
            } else {
                t.status = TransferStatus::blocked;  // already detached
                fail(t, "unreachable", touched);
            }
        }
    }
    for (TransferId id : blocked) {
        Transfer& t = get(id);
        if (!topology_.eventually_routable(t.src, t.dst)) {
            fail(t, "unreachable", touched);
        }
    }
    recompute(touched);
    flush_failures();
}

void Network::component_up(const std::string& component) {
    std::set<std::string> touched;
    for (auto& [id, t] : transfers_) {
        if (t.status != TransferStatus::blocked) continue;
        try {
            t.path = topology_.route(t.src, t.dst);
        } catch (const NoRoute&) {
            continue;
        }
        t.status = TransferStatus::active;
        t.last_update = engine_.now();
        attach(t);
        touched.insert(t.path.begin(), t.path.end());
        engine_.record("transfer-resume", "network", t.name, "after=" + component);
        if (t.path.empty()) {
            t.rate_bps = fair_rate(t);
            schedule_drain(t);
        }
    }
    recompute(touched);
    flush_failures();
}

void Network::delay_flows(const std::string& component, double seconds) {
    if (!(seconds >= 0.0)) {
        throw std::invalid_argument("timing delay must be >= 0");
    }
    for (auto& [id, t] : transfers_) {
        const bool live = t.status == TransferStatus::active || t.status == TransferStatus::delivering ||
                          t.status == TransferStatus::blocked;
        if (!live || !topology_.traverses(t.path, component)) continue;
        t.extra_delay += seconds;
        if (t.status == TransferStatus::delivering && t.pending_event != 0) {
            const auto due = engine_.time_of(t.pending_event);
            engine_.cancel(t.pending_event);
            const TransferId tid = id;
            t.pending_event = engine_.schedule(
                *due + seconds,
                EventSpec{EventKind::completion, "transfer-end", "network", t.name,
                          "src=" + t.src + ";dst=" + t.dst + ";bytes=" + fmt(t.total_bytes)},
                [this, tid] { on_delivered(tid); });
        }
    }
}

void Network::duplicate_next(const std::string& link) {
    (void)topology_.link(link);
    duplicate_armed_.insert(link);
}

}  // namespace depsim
