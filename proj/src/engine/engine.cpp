#include "depsim/engine/engine.hpp"

#include <cmath>
#include <string>

namespace depsim {

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::completion: return "completion";
        case EventKind::fault: return "fault";
        case EventKind::timeout: return "timeout";
        case EventKind::notification: return "notification";
        case EventKind::user: return "user";
    }
    return "?";
}

Process& Process::operator=(Process&& other) noexcept {
    if (this != &other) {
        if (handle_) {
            handle_.destroy();
        }
        handle_ = std::exchange(other.handle_, {});
    }
    return *this;
}

Process::~Process() {
    if (handle_) {
        handle_.destroy();
    }
}

Engine::Engine(std::uint64_t seed) : seed_(seed) {}

Engine::~Engine() {
    for (auto& [pid, rec] : processes_) {
        if (rec.handle) {
            rec.handle.destroy();
        }
    }
}

EventId Engine::schedule(SimTime at, EventSpec spec, std::function<void()> action) {
    if (std::isnan(at) || at < clock_) {
        throw PastTimeError("cannot schedule at t=" + format_real(at) + " before clock " +
                            format_real(clock_));
    }
    const EventId seq = next_seq_++;
    events_.emplace(seq, Event{std::move(spec), at, std::move(action)});
    queue_.push(QueueKey{at, seq});
    return seq;
}

EventId Engine::schedule_after(SimTime delay, EventSpec spec, std::function<void()> action) {
    return schedule(clock_ + delay, std::move(spec), std::move(action));
}

bool Engine::cancel(EventId id) { return events_.erase(id) > 0; }

bool Engine::pending(EventId id) const { return events_.contains(id); }

std::optional<SimTime> Engine::time_of(EventId id) const {
    auto it = events_.find(id);
    if (it == events_.end()) {
        return std::nullopt;
    }
    return it->second.time;
}

RunStats Engine::run_until(SimTime t_end) {
    if (t_end < clock_) {
        throw PastTimeError("run_until target precedes the clock");
    }
    RunStats stats;
    struct CurrentReset {
        EventId& slot;
        ~CurrentReset() { slot = 0; }
    } reset{current_};

    while (!queue_.empty()) {
        const QueueKey key = queue_.top();
        auto it = events_.find(key.seq);
        if (it == events_.end()) {
            queue_.pop();
            continue;
        }
        if (key.time > t_end) {
            break;
        }
        queue_.pop();
        Event ev = std::move(it->second);
        events_.erase(it);
        clock_ = key.time;
        current_ = key.seq;
        if (!ev.spec.label.empty()) {
            trace_.append(TraceRow{key.seq, clock_, ev.spec.label, ev.spec.source, ev.spec.target,
                                   ev.spec.info});
        }
        if (ev.action) {
            ev.action();
        }
        ++stats.events_processed;
    }
    if (!events_.empty()) {
        clock_ = t_end;
    }
    stats.final_time = clock_;
    return stats;
}

void Engine::record(std::string_view kind, std::string_view source, std::string_view target,
                    std::string_view info) {
    trace_.append(TraceRow{current_, clock_, std::string(kind), std::string(source),
                           std::string(target), std::string(info)});
}

SeededRng Engine::substream(std::string_view key) const { return SeededRng(seed_).derive(key); }

void Engine::set_owner_check(std::function<bool(std::string_view)> check) {
    owner_check_ = std::move(check);
}

ProcessId Engine::spawn(std::string owner, Process behavior) {
    if (owner_check_ && !owner_check_(owner)) {
        throw OwnerDownError("cannot spawn a process on non-operational owner " + owner);
    }
    const ProcessId pid = next_pid_++;
    Process::Handle h = behavior.release();
    h.promise().engine = this;
    h.promise().id = pid;
    ProcessRecord rec;
    rec.handle = h;
    rec.owner = std::move(owner);
    auto& slot = processes_[pid] = std::move(rec);
    slot.wake_event = schedule(clock_, EventSpec{}, [this, pid] {
        auto& r = processes_.at(pid);
        r.started = true;
        resume(pid, Wake{});
    });
    return pid;
}

ProcessState Engine::state(ProcessId pid) const { return processes_.at(pid).state; }

void Engine::resume(ProcessId pid, Wake wake) {
    auto& rec = processes_.at(pid);
    rec.wake_event = 0;
    rec.state = ProcessState::runnable;
    rec.running = true;
    rec.handle.promise().wake = std::move(wake);
    rec.handle.resume();
    auto& after = processes_.at(pid);
    after.running = false;
    if (after.handle.done()) {
        finish(pid);
    }
}

void Engine::finish(ProcessId pid) {
    auto& rec = processes_.at(pid);
    std::exception_ptr error = rec.handle.promise().error;
    rec.handle.destroy();
    rec.handle = {};
    rec.state = ProcessState::terminated;
    rec.deferred_interrupt.reset();
    if (error) {
        std::rethrow_exception(error);
    }
}

void Engine::block(ProcessId pid, EventId wake_event) {
    auto& rec = processes_.at(pid);
    rec.state = ProcessState::blocked;
    rec.wake_event = wake_event;
    if (rec.deferred_interrupt) {
        std::string reason = std::move(*rec.deferred_interrupt);
        rec.deferred_interrupt.reset();
        deliver_interrupt(pid, std::move(reason));
    }
}

void Engine::deliver_interrupt(ProcessId pid, std::string reason) {
    auto& rec = processes_.at(pid);
    if (rec.wake_event != 0) {
        cancel(rec.wake_event);
    }
    rec.state = ProcessState::interrupted;
    record("interrupt", rec.owner, "proc:" + std::to_string(pid), "reason=" + reason);
    rec.wake_event = schedule(clock_, EventSpec{}, [this, pid, reason] {
        resume(pid, Wake{true, reason});
    });
}

void Engine::interrupt(ProcessId pid, std::string reason) {
    auto it = processes_.find(pid);
    if (it == processes_.end()) {
        throw std::out_of_range("unknown process " + std::to_string(pid));
    }
    auto& rec = it->second;
    const std::string target = "proc:" + std::to_string(pid);
    if (rec.state == ProcessState::terminated) {
        return;
    }
    if (rec.state == ProcessState::interrupted || (rec.running && rec.deferred_interrupt)) {
        record("interrupt-dropped", rec.owner, target, "reason=" + reason);
        return;
    }
    if (rec.running) {
        rec.deferred_interrupt = std::move(reason);
        return;
    }
    if (!rec.started) {
        // Never ran: stopping it is the whole effect.
        cancel(rec.wake_event);
        rec.wake_event = 0;
        record("interrupt", rec.owner, target, "reason=" + reason);
        rec.handle.destroy();
        rec.handle = {};
        rec.state = ProcessState::terminated;
        return;
    }
    deliver_interrupt(pid, std::move(reason));
}

std::size_t Engine::interrupt_owned(std::string_view owner, const std::string& reason) {
    std::vector<ProcessId> victims;
    for (const auto& [pid, rec] : processes_) {
        if (rec.owner == owner && rec.state != ProcessState::terminated) {
            victims.push_back(pid);
        }
    }
    for (ProcessId pid : victims) {
        interrupt(pid, reason);
    }
    return victims.size();
}

void Engine::activate(ProcessId pid) {
    auto& rec = processes_.at(pid);
    if (rec.state != ProcessState::blocked || rec.wake_event != 0) {
        return;
    }
    rec.state = ProcessState::runnable;
    rec.wake_event = schedule(clock_, EventSpec{}, [this, pid] { resume(pid, Wake{}); });
}

Engine::DelayAwaiter Engine::delay(SimTime dt) { return DelayAwaiter{this, dt, 0}; }

Engine::DelayAwaiter Engine::delay(SimTime dt, const EventSpec& spec) {
    const std::uint64_t token = next_token_++;
    staged_specs_.emplace(token, spec);
    return DelayAwaiter{this, dt, token};
}

void Engine::DelayAwaiter::await_suspend(Process::Handle h) {
    handle = h;
    const ProcessId pid = h.promise().id;
    Engine* e = engine;
    EventSpec spec;
    if (token != 0) {
        if (auto node = e->staged_specs_.extract(token)) {
            spec = std::move(node.mapped());
        }
    }
    const EventId ev = e->schedule_after(dt, std::move(spec), [e, pid] { e->resume(pid, Wake{}); });
    e->block(pid, ev);
}

Wake Engine::DelayAwaiter::await_resume() { return std::move(handle.promise().wake); }

void Engine::PassivateAwaiter::await_suspend(Process::Handle h) {
    handle = h;
    engine->block(h.promise().id, 0);
}

Wake Engine::PassivateAwaiter::await_resume() { return std::move(handle.promise().wake); }

}  // namespace depsim
