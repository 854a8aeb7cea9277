#pragma once

#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "depsim/engine/random.hpp"
#include "depsim/engine/trace.hpp"

namespace depsim {

/// Simulated time in seconds.
using SimTime = double;
using EventId = std::uint64_t;
using ProcessId = std::uint64_t;

enum class EventKind { completion, fault, timeout, notification, user };

std::string_view to_string(EventKind kind) noexcept;

class PastTimeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class OwnerDownError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Descriptive part of an event. A non-empty `label` makes the engine write a
/// trace row when the event executes.
struct EventSpec {
    EventKind kind = EventKind::user;
    std::string label;
    std::string source;
    std::string target;
    std::string info;
};

struct RunStats {
    std::uint64_t events_processed = 0;
    SimTime final_time = 0.0;

    friend bool operator==(const RunStats&, const RunStats&) = default;
};

/// What a suspended process observes when it resumes.
struct Wake {
    bool interrupted = false;
    std::string reason;
};

enum class ProcessState { runnable, blocked, interrupted, terminated };

class Engine;

/// Coroutine type for simulation processes ("active objects").
///
/// A process is written as a coroutine taking the engine by reference and
/// suspending only through engine awaitables:
///
///     Process ping(Engine& e) {
///         for (;;) {
///             Wake w = co_await e.delay(1.0);
///             if (w.interrupted) co_return;
///         }
///     }
class Process {
public:
    struct promise_type {
        Engine* engine = nullptr;
        ProcessId id = 0;
        Wake wake;
        std::exception_ptr error;

        Process get_return_object() {
            return Process(std::coroutine_handle<promise_type>::from_promise(*this));
        }
        std::suspend_always initial_suspend() noexcept { return {}; }
        std::suspend_always final_suspend() noexcept { return {}; }
        void return_void() noexcept {}
        void unhandled_exception() noexcept { error = std::current_exception(); }
    };
    using Handle = std::coroutine_handle<promise_type>;

    Process(Process&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
    Process& operator=(Process&& other) noexcept;
    Process(const Process&) = delete;
    Process& operator=(const Process&) = delete;
    ~Process();

    Handle release() noexcept { return std::exchange(handle_, {}); }

private:
    explicit Process(Handle h) : handle_(h) {}
    Handle handle_;
};

/// Deterministic discrete-event core.
///
/// Events execute in strict (time, seq) order; seq is assigned at scheduling.
/// An engine is single-threaded; distinct engines share no state.
class Engine {
public:
    explicit Engine(std::uint64_t seed = 42);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    [[nodiscard]] SimTime now() const noexcept { return clock_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Throws PastTimeError when `at` precedes the clock.
    EventId schedule(SimTime at, EventSpec spec, std::function<void()> action);
    EventId schedule_after(SimTime delay, EventSpec spec, std::function<void()> action);

    /// True iff the event existed and had not fired yet.
    bool cancel(EventId id);
    [[nodiscard]] bool pending(EventId id) const;
    [[nodiscard]] std::optional<SimTime> time_of(EventId id) const;
    [[nodiscard]] std::size_t queue_size() const noexcept { return events_.size(); }

    RunStats run_until(SimTime t_end);

    /// Sequence number of the executing event, 0 outside event execution.
    [[nodiscard]] EventId current_event() const noexcept { return current_; }

    /// Writes an annotation row attributed to the executing event.
    void record(std::string_view kind, std::string_view source, std::string_view target,
                std::string_view info = {});

    Trace& trace() noexcept { return trace_; }
    [[nodiscard]] const Trace& trace() const noexcept { return trace_; }

    /// Independent random stream for a stable consumer key.
    [[nodiscard]] SeededRng substream(std::string_view key) const;

    /// Liveness predicate consulted by spawn(); unknown owners count as alive.
    void set_owner_check(std::function<bool(std::string_view)> check);

    ProcessId spawn(std::string owner, Process behavior);
    void interrupt(ProcessId pid, std::string reason);
    /// Interrupts every live process owned by `owner`; returns how many.
    std::size_t interrupt_owned(std::string_view owner, const std::string& reason);
    /// Wakes a passivated process at the current time.
    void activate(ProcessId pid);
    [[nodiscard]] ProcessState state(ProcessId pid) const;

    // Awaiters carry only trivially relocatable members; GCC 11 mishandles
    // strings inside co_await temporaries, so the event spec is staged in the
    // engine under `token`.
    struct DelayAwaiter {
        Engine* engine;
        SimTime dt;
        std::uint64_t token;
        Process::Handle handle{};

        bool await_ready() const noexcept { return false; }
        void await_suspend(Process::Handle h);
        Wake await_resume();
    };

    struct PassivateAwaiter {
        Engine* engine;
        Process::Handle handle{};

        bool await_ready() const noexcept { return false; }
        void await_suspend(Process::Handle h);
        Wake await_resume();
    };

    /// Suspends the calling process for `dt`; the wake event is cancelled if
    /// the process is interrupted first.
    ///
    /// Inside a coroutine pass a named EventSpec, not a temporary: GCC 11
    /// relocates by-value temporaries of co_await operands bitwise.
    DelayAwaiter delay(SimTime dt);
    DelayAwaiter delay(SimTime dt, const EventSpec& spec);
    /// Suspends the calling process until activate() or interrupt().
    PassivateAwaiter passivate() { return {this}; }

private:
    struct Event {
        EventSpec spec;
        SimTime time;
        std::function<void()> action;
    };
    struct QueueKey {
        SimTime time;
        EventId seq;
        bool operator>(const QueueKey& o) const noexcept {
            return time != o.time ? time > o.time : seq > o.seq;
        }
    };
    struct ProcessRecord {
        Process::Handle handle;
        std::string owner;
        ProcessState state = ProcessState::runnable;
        EventId wake_event = 0;
        bool started = false;
        bool running = false;
        std::optional<std::string> deferred_interrupt;
    };

    void resume(ProcessId pid, Wake wake);
    void block(ProcessId pid, EventId wake_event);
    void deliver_interrupt(ProcessId pid, std::string reason);
    void finish(ProcessId pid);

    std::uint64_t seed_;
    SimTime clock_ = 0.0;
    EventId next_seq_ = 1;
    EventId current_ = 0;
    std::priority_queue<QueueKey, std::vector<QueueKey>, std::greater<>> queue_;
    std::unordered_map<EventId, Event> events_;
    Trace trace_;
    std::function<bool(std::string_view)> owner_check_;
    ProcessId next_pid_ = 1;
    std::map<ProcessId, ProcessRecord> processes_;
    std::uint64_t next_token_ = 1;
    std::unordered_map<std::uint64_t, EventSpec> staged_specs_;
};

}  // namespace depsim
