#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "depsim/engine/engine.hpp"
#include "depsim/resources/components.hpp"

namespace depsim {

enum class FaultType { crash, omission, timing, byzantine };

std::string_view to_string(FaultType type) noexcept;
FaultType parse_fault_type(std::string_view text);

struct FaultKind {
    FaultType type = FaultType::crash;
    /// Omission severity in (0, 1].
    double loss_fraction = 0.0;
    /// Timing: extra delay added to pending termination events.
    Distribution extra_delay = Distribution::exponential(1.0);

    friend bool operator==(const FaultKind&, const FaultKind&) = default;
};

class AlreadyDown : public std::logic_error {
public:
    explicit AlreadyDown(const std::string& id) : std::logic_error("component already down: " + id) {}
};

class PermanentlyDown : public std::logic_error {
public:
    explicit PermanentlyDown(const std::string& id) : std::logic_error("component is permanently down: " + id) {}
};

/// Whether a fault type can strike a component kind.
[[nodiscard]] bool fault_applies(FaultType type, ComponentKind kind) noexcept;

struct FaultProfile {
    std::string component;
    /// Time-to-failure distribution; its mean is the MTTF.
    Distribution time_to_failure = Distribution::exponential(1.0);
    FaultKind kind;
    bool permanent = false;
    /// Time to repair; crash and omission faults without it never end.
    std::optional<Distribution> time_to_repair;
    /// Fixed instant of the first fault instead of a sampled one.
    std::optional<SimTime> first_at;
};

/// Throws invalid_argument on inconsistent profiles.
void validate(const FaultProfile& profile, ComponentKind target);

struct FaultEvent {
    SimTime time = 0.0;
    std::string component;
    ComponentKind component_kind = ComponentKind::center;
    std::string center;
    FaultKind kind;
    bool permanent = false;
    bool recovery = false;
    /// Omission fraction or sampled timing delay.
    double magnitude = 0.0;
    /// Trace seq of the fault or recovery record.
    EventId cause = 0;
};

struct SubscriptionFilter {
    std::set<std::string> components;
    std::set<FaultType> kinds;
    std::set<std::string> centers;

    [[nodiscard]] bool matches(const FaultEvent& event) const;
};

/// Monitoring component: applies nothing itself, it fans fault events out to
/// subscribers as notification events at the fault's timestamp, in
/// subscription order.
class Monitor {
public:
    using Handler = std::function<void(const FaultEvent&, EventId notify_seq)>;

    explicit Monitor(Engine& engine) : engine_(engine) {}

    std::uint64_t subscribe(std::string subscriber, SubscriptionFilter filter, Handler handler);
    void unsubscribe(std::uint64_t id);
    void dispatch(const FaultEvent& event);

    [[nodiscard]] std::size_t subscription_count() const noexcept { return subscriptions_.size(); }

private:
    struct Subscription {
        std::string subscriber;
        SubscriptionFilter filter;
        Handler handler;
    };

    Engine& engine_;
    std::uint64_t next_id_ = 1;
    std::map<std::uint64_t, Subscription> subscriptions_;
};

/// Component-specific consequences of a fault, supplied by the model owner.
class FaultEffects {
public:
    virtual ~FaultEffects() = default;
    virtual void crash(const ComponentInfo& component, bool permanent) = 0;
    virtual void recover(const ComponentInfo& component) = 0;
    virtual void omission(const ComponentInfo& component, double loss_fraction) = 0;
    virtual void end_omission(const ComponentInfo& component) = 0;
    virtual void timing(const ComponentInfo& component, double extra_delay) = 0;
    /// Returns false when the perturbation had nothing to act on.
    virtual bool byzantine(const ComponentInfo& component) = 0;
};

/// Turns fault profiles into fault and recovery events.
///
/// Each fault writes one `fault` trace row, updates component state, applies
/// its effects and only then hands the event to the monitor.
class FaultInjector {
public:
    FaultInjector(Engine& engine, ComponentRegistry& registry, Monitor& monitor, FaultEffects& effects);

    /// Throws UnknownComponent or invalid_argument.
    void attach_profile(const FaultProfile& profile);

    /// Immediate fault; `repair_after` schedules a recovery for crash and
    /// omission faults. Throws AlreadyDown.
    void inject(const std::string& component, const FaultKind& kind, bool permanent,
                std::optional<double> repair_after = std::nullopt);

    /// Throws PermanentlyDown.
    void recover(const std::string& component);

    /// Random transient Byzantine faults on uniformly chosen components, at
    /// exponential gaps averaging `rate_per_1e4s` events per 10^4 s.
    void byzantine_storm(bool enable, double rate_per_1e4s = 1.0);

    [[nodiscard]] std::size_t injected() const noexcept { return injected_; }
    [[nodiscard]] std::size_t injected(std::string_view component) const;

private:
    void schedule_fault(std::size_t profile, SimTime at);
    void fire_profile(std::size_t profile);
    /// Applies a fault now; returns the sampled magnitude.
    double apply(const std::string& component, const FaultKind& kind, bool permanent, SeededRng& rng,
                 std::string_view origin);
    void storm_tick();
    void schedule_storm();

    Engine& engine_;
    ComponentRegistry& registry_;
    Monitor& monitor_;
    FaultEffects& effects_;
    std::vector<FaultProfile> profiles_;
    std::vector<SeededRng> profile_rngs_;
    std::map<std::string, std::size_t, std::less<>> per_component_;
    std::map<std::string, FaultKind, std::less<>> active_omissions_;
    std::map<std::string, FaultType, std::less<>> down_by_;
    std::size_t injected_ = 0;
    SeededRng manual_rng_;
    bool storm_enabled_ = false;
    double storm_rate_ = 1.0;
    SeededRng storm_rng_;
    EventId storm_event_ = 0;
};

}  // namespace depsim
