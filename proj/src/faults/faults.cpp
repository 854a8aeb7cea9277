#include "depsim/faults/faults.hpp"

#include <cmath>

namespace depsim {

std::string_view to_string(FaultType type) noexcept {
    switch (type) {
        case FaultType::crash: return "crash";
        case FaultType::omission: return "omission";
        case FaultType::timing: return "timing";
        case FaultType::byzantine: return "byzantine";
    }
    return "?";
}

FaultType parse_fault_type(std::string_view text) {
    if (text == "crash") return FaultType::crash;
    if (text == "omission") return FaultType::omission;
    if (text == "timing") return FaultType::timing;
    if (text == "byzantine") return FaultType::byzantine;
    throw std::invalid_argument("unknown fault kind: " + std::string(text));
}

bool fault_applies(FaultType type, ComponentKind kind) noexcept {
    using K = ComponentKind;
    switch (type) {
        case FaultType::crash:
            return kind == K::processing_unit || kind == K::link || kind == K::router || kind == K::database ||
                   kind == K::storage;
        case FaultType::omission: return kind == K::link;
        case FaultType::timing: return kind == K::processing_unit || kind == K::link || kind == K::router;
        case FaultType::byzantine:
            return kind == K::processing_unit || kind == K::link || kind == K::router || kind == K::database ||
                   kind == K::storage || kind == K::scheduler;
    }
    return false;
}

void validate(const FaultProfile& p, ComponentKind target) {
    if (!fault_applies(p.kind.type, target)) {
        throw std::invalid_argument(std::string(to_string(p.kind.type)) + " faults do not apply to " +
                                    std::string(to_string(target)) + " " + p.component);
    }
    p.time_to_failure.validate();
    if (!(p.time_to_failure.mean() > 0.0)) {
        throw std::invalid_argument("mttf must be > 0 for " + p.component);
    }
    if (p.permanent && p.time_to_repair) {
        throw std::invalid_argument("a permanent fault cannot have a repair time: " + p.component);
    }
    if (p.time_to_repair) {
        p.time_to_repair->validate();
    }
    if (p.kind.type == FaultType::omission && !(p.kind.loss_fraction > 0.0 && p.kind.loss_fraction <= 1.0)) {
        throw std::invalid_argument("loss fraction must lie in (0,1] for " + p.component);
    }
    if (p.kind.type == FaultType::timing) {
        p.kind.extra_delay.validate();
    }
    if (p.first_at && !(*p.first_at >= 0.0)) {
        throw std::invalid_argument("first fault time must be >= 0 for " + p.component);
    }
}

bool SubscriptionFilter::matches(const FaultEvent& e) const {
    return (components.empty() || components.contains(e.component)) &&
           (kinds.empty() || kinds.contains(e.kind.type)) && (centers.empty() || centers.contains(e.center));
}

std::uint64_t Monitor::subscribe(std::string subscriber, SubscriptionFilter filter, Handler handler) {
    const auto id = next_id_++;
    subscriptions_.emplace(id, Subscription{std::move(subscriber), std::move(filter), std::move(handler)});
    return id;
}

void Monitor::unsubscribe(std::uint64_t id) { subscriptions_.erase(id); }

void Monitor::dispatch(const FaultEvent& event) {
    const std::string info = "component=" + event.component + ";fault=" + std::string(to_string(event.kind.type)) +
                             ";recovery=" + (event.recovery ? "1" : "0") + ";cause=" + std::to_string(event.cause);
    for (const auto& [id, sub] : subscriptions_) {
        if (!sub.filter.matches(event)) continue;
        const std::uint64_t sid = id;
        engine_.schedule(engine_.now(), EventSpec{EventKind::notification, "notify", "monitor", sub.subscriber, info},
                         [this, sid, event] {
                             auto it = subscriptions_.find(sid);
                             if (it != subscriptions_.end()) {
                                 it->second.handler(event, engine_.current_event());
                             }
                         });
    }
}

FaultInjector::FaultInjector(Engine& engine, ComponentRegistry& registry, Monitor& monitor, FaultEffects& effects)
    : engine_(engine),
      registry_(registry),
      monitor_(monitor),
      effects_(effects),
      manual_rng_(engine.substream("fault:manual")),
      storm_rng_(engine.substream("fault:storm")) {}

std::size_t FaultInjector::injected(std::string_view component) const {
    auto it = per_component_.find(component);
    return it == per_component_.end() ? 0 : it->second;
}

void FaultInjector::attach_profile(const FaultProfile& profile) {
    validate(profile, registry_.info(profile.component).kind);
    const std::size_t index = profiles_.size();
    profiles_.push_back(profile);
    profile_rngs_.push_back(
        engine_.substream("fault:" + profile.component + ":" + std::string(to_string(profile.kind.type))));
    const SimTime first = profile.first_at ? std::max(*profile.first_at, engine_.now())
                                           : engine_.now() + sample_positive(profile_rngs_[index], profile.time_to_failure);
    schedule_fault(index, first);
}

void FaultInjector::schedule_fault(std::size_t profile, SimTime at) {
    engine_.schedule(at, EventSpec{EventKind::fault, "", "injector", profiles_[profile].component, ""},
                     [this, profile] { fire_profile(profile); });
}

void FaultInjector::fire_profile(std::size_t index) {
    const FaultProfile& p = profiles_[index];
    SeededRng& rng = profile_rngs_[index];
    const auto& info = registry_.info(p.component);
    const bool transient_kind = p.kind.type == FaultType::crash || p.kind.type == FaultType::omission;
    const bool permanent = p.permanent || (transient_kind && !p.time_to_repair);
    const bool blocked = !registry_.is_operational(p.component) ||
                         (p.kind.type == FaultType::omission && active_omissions_.contains(p.component));
    if (blocked) {
        engine_.record("fault-skip", "injector", p.component,
                       "type=" + std::string(to_string(p.kind.type)) + ";reason=already-down");
        if (!info.permanently_down) {
            schedule_fault(index, engine_.now() + sample_positive(rng, p.time_to_failure));
        }
        return;
    }
    apply(p.component, p.kind, permanent, rng, "injector");
    if (permanent) {
        return;
    }
    if (transient_kind) {
        const double repair = sample_positive(rng, *p.time_to_repair);
        engine_.schedule_after(repair, EventSpec{EventKind::fault, "", "injector", p.component, ""},
                               [this, index] {
                                   const FaultProfile& prof = profiles_[index];
                                   if (!registry_.info(prof.component).permanently_down) {
                                       recover(prof.component);
                                       schedule_fault(index, engine_.now() +
                                                                 sample_positive(profile_rngs_[index],
                                                                                 prof.time_to_failure));
                                   }
                               });
    } else {
        schedule_fault(index, engine_.now() + sample_positive(rng, p.time_to_failure));
    }
}

double FaultInjector::apply(const std::string& component, const FaultKind& kind, bool permanent, SeededRng& rng,
                            std::string_view origin) {
    const auto& info = registry_.info(component);
    if (!fault_applies(kind.type, info.kind)) {
        throw std::invalid_argument(std::string(to_string(kind.type)) + " faults do not apply to " + component);
    }
    if (!registry_.is_operational(component)) {
        throw AlreadyDown(component);
    }
    double magnitude = 0.0;
    if (kind.type == FaultType::omission) magnitude = kind.loss_fraction;
    if (kind.type == FaultType::timing) magnitude = sample_positive(rng, kind.extra_delay);
    engine_.record("fault", origin, component,
                   "type=" + std::string(to_string(kind.type)) + ";permanent=" + (permanent ? "1" : "0") +
                       ";magnitude=" + format_real(magnitude));
    const EventId cause = engine_.current_event();
    switch (kind.type) {
        case FaultType::crash:
            registry_.set_crashed(component, permanent);
            effects_.crash(registry_.info(component), permanent);
            break;
        case FaultType::omission:
            active_omissions_[component] = kind;
            effects_.omission(info, kind.loss_fraction);
            break;
        case FaultType::timing: effects_.timing(info, magnitude); break;
        case FaultType::byzantine: effects_.byzantine(info); break;
    }
    ++injected_;
    ++per_component_[component];
    monitor_.dispatch(FaultEvent{engine_.now(), component, info.kind, info.center, kind, permanent, false, magnitude,
                                 cause});
    return magnitude;
}

void FaultInjector::inject(const std::string& component, const FaultKind& kind, bool permanent,
                           std::optional<double> repair_after) {
    apply(component, kind, permanent, manual_rng_, "injector");
    const bool transient_kind = kind.type == FaultType::crash || kind.type == FaultType::omission;
    if (repair_after && transient_kind && !permanent) {
        engine_.schedule_after(*repair_after, EventSpec{EventKind::fault, "", "injector", component, ""},
                               [this, component] {
                                   if (!registry_.info(component).permanently_down) recover(component);
                               });
    }
}

void FaultInjector::recover(const std::string& component) {
    const auto& info = registry_.info(component);
    if (info.permanently_down) {
        throw PermanentlyDown(component);
    }
    const auto omission = active_omissions_.find(component);
    const bool omitting = omission != active_omissions_.end();
    const bool crashed = info.health == Health::crashed;
    if (!omitting && !crashed) {
        return;
    }
    const FaultKind kind = crashed ? FaultKind{FaultType::crash} : omission->second;
    // The row precedes the effects so work restarted by them traces after it.
    engine_.record("recovery", "injector", component, "type=" + std::string(to_string(kind.type)));
    if (omitting) {
        active_omissions_.erase(omission);
        effects_.end_omission(info);
    }
    if (crashed) {
        registry_.set_operational(component);
        effects_.recover(info);
    }
    monitor_.dispatch(FaultEvent{engine_.now(), component, info.kind, info.center, kind, false, true, 0.0,
                                 engine_.current_event()});
}

void FaultInjector::byzantine_storm(bool enable, double rate_per_1e4s) {
    if (enable && !(rate_per_1e4s > 0.0)) {
        throw std::invalid_argument("storm rate must be > 0");
    }
    storm_enabled_ = enable;
    storm_rate_ = rate_per_1e4s;
    if (storm_event_ != 0) {
        engine_.cancel(storm_event_);
        storm_event_ = 0;
    }
    if (enable) {
        schedule_storm();
    }
}

void FaultInjector::schedule_storm() {
    const double gap = sample(storm_rng_, Distribution::exponential(1e4 / storm_rate_));
    storm_event_ = engine_.schedule_after(gap, EventSpec{EventKind::fault, "", "storm", "", ""},
                                          [this] { storm_tick(); });
}

void FaultInjector::storm_tick() {
    storm_event_ = 0;
    std::vector<std::string> candidates;
    for (const auto& id : registry_.ids()) {
        if (fault_applies(FaultType::byzantine, registry_.info(id).kind)) candidates.push_back(id);
    }
    if (!candidates.empty()) {
        const auto& target = candidates[storm_rng_.below(candidates.size())];
        if (registry_.is_operational(target)) {
            apply(target, FaultKind{FaultType::byzantine}, false, storm_rng_, "storm");
        } else {
            engine_.record("storm-skip", "storm", target, "reason=down");
        }
    }
    if (storm_enabled_) {
        schedule_storm();
    }
}

}  // namespace depsim
