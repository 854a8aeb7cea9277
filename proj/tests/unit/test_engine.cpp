#include "doctest.h"

#include "depsim/engine/engine.hpp"

#include <string>
#include <vector>

using namespace depsim;

TEST_CASE("events at equal time run in scheduling order") {
    Engine e;
    std::vector<std::string> order;
    e.schedule(5.0, {}, [&] { order.push_back("A"); });
    e.schedule(5.0, {}, [&] { order.push_back("B"); });
    e.schedule(1.0, {}, [&] { order.push_back("early"); });
    e.run_until(10.0);
    CHECK(order == std::vector<std::string>{"early", "A", "B"});
}

TEST_CASE("event scheduled at the current clock runs after the executing event") {
    Engine e;
    std::vector<int> order;
    e.schedule(2.0, {}, [&] {
        order.push_back(1);
        e.schedule(e.now(), {}, [&] {
            order.push_back(3);
            CHECK(e.now() == 2.0);
        });
        order.push_back(2);
    });
    e.schedule(2.0, {}, [&] { order.push_back(4); });
    e.run_until(3.0);
    // Same timestamp, higher seq than the already queued sibling.
    CHECK(order == std::vector<int>{1, 2, 4, 3});
}

TEST_CASE("scheduling in the past is rejected") {
    Engine e;
    e.schedule(4.0, {}, [] {});
    e.run_until(4.0);
    CHECK_THROWS_AS(e.schedule(e.now() - 1.0, {}, [] {}), PastTimeError);
}

TEST_CASE("cancel semantics") {
    Engine e;
    int fired = 0;
    const EventId a = e.schedule(1.0, {}, [&] { ++fired; });
    const EventId b = e.schedule(2.0, {}, [&] { ++fired; });
    CHECK(e.cancel(a));
    CHECK_FALSE(e.cancel(a));
    e.run_until(5.0);
    CHECK(fired == 1);
    CHECK_FALSE(e.cancel(b));
}

TEST_CASE("run_until bounds") {
    SUBCASE("empty queue leaves the clock") {
        Engine e;
        const RunStats s = e.run_until(10.0);
        CHECK(s.events_processed == 0);
        CHECK(s.final_time == 0.0);
    }
    SUBCASE("partial horizon") {
        Engine e;
        for (double t : {1.0, 2.0, 3.0}) {
            e.schedule(t, {}, [] {});
        }
        const RunStats s = e.run_until(2.0);
        CHECK(s.events_processed == 2);
        CHECK(s.final_time == 2.0);
        const RunStats rest = e.run_until(10.0);
        CHECK(rest.events_processed == 1);
        CHECK(rest.final_time == 3.0);
    }
}

TEST_CASE("labeled events are traced with their own seq") {
    Engine e;
    const EventId id = e.schedule(1.5, {EventKind::completion, "job-finish", "pu", "job", "x=1"}, [&] {
        e.record("note", "a", "b", "y=2");
    });
    e.run_until(2.0);
    REQUIRE(e.trace().size() == 2);
    CHECK(e.trace().rows()[0].seq == id);
    CHECK(e.trace().rows()[0].kind == "job-finish");
    CHECK(e.trace().rows()[1].seq == id);
    CHECK(e.trace().to_csv() ==
          "seq,time,kind,source,target,info\n1,1.50000000,job-finish,pu,job,x=1\n"
          "1,1.50000000,note,a,b,y=2\n");
}

TEST_CASE("random event storms execute in (time, seq) order and never run cancelled events") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Engine e(seed);
        SeededRng rng(seed);
        std::vector<EventId> ids;
        std::vector<std::pair<double, EventId>> executed;
        for (int i = 0; i < 300; ++i) {
            const double t = std::floor(rng.uniform01() * 50.0);
            const EventId id = e.schedule(t, {}, [&, t] { executed.emplace_back(t, e.current_event()); });
            ids.push_back(id);
        }
        std::vector<EventId> cancelled;
        for (EventId id : ids) {
            if (rng.uniform01() < 0.3 && e.cancel(id)) {
                cancelled.push_back(id);
            }
        }
        e.run_until(100.0);
        CHECK(executed.size() == ids.size() - cancelled.size());
        for (std::size_t i = 1; i < executed.size(); ++i) {
            CHECK(executed[i - 1] < executed[i]);
        }
        for (auto id : cancelled) {
            for (auto& [t, seq] : executed) {
                CHECK(seq != id);
            }
        }
    }
}

namespace {

Process ticker(Engine& e, std::vector<double>& log, int n) {
    for (int i = 0; i < n; ++i) {
        Wake w = co_await e.delay(1.0);
        if (w.interrupted) {
            log.push_back(-e.now());
            co_return;
        }
        log.push_back(e.now());
    }
}

Process waiter(Engine& e, std::vector<std::string>& seen) {
    const EventSpec done{EventKind::completion, "transfer-complete", "net", "t1", ""};
    Wake w = co_await e.delay(10.0, done);
    seen.push_back(w.interrupted ? w.reason : "completed");
}

Process sleeper(Engine& e, std::vector<std::string>& seen) {
    Wake w = co_await e.passivate();
    seen.push_back(w.interrupted ? "int:" + w.reason : "woken");
}

}  // namespace

TEST_CASE("processes advance only through events") {
    Engine e;
    std::vector<double> log;
    e.spawn("pu0", ticker(e, log, 3));
    e.run_until(100.0);
    CHECK(log == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("interrupt cancels the awaited completion") {
    Engine e;
    std::vector<std::string> seen;
    const ProcessId pid = e.spawn("pu0", waiter(e, seen));
    e.schedule(1.0, {}, [&] { e.interrupt(pid, "crash"); });
    e.run_until(100.0);
    CHECK(seen == std::vector<std::string>{"crash"});
    CHECK(e.trace().count("transfer-complete") == 0);
    CHECK(e.trace().count("interrupt") == 1);
    CHECK(e.state(pid) == ProcessState::terminated);
}

TEST_CASE("only the first of two pending interrupts is observed") {
    Engine e;
    std::vector<std::string> seen;
    const ProcessId pid = e.spawn("pu0", sleeper(e, seen));
    e.schedule(1.0, {}, [&] {
        e.interrupt(pid, "first");
        e.interrupt(pid, "second");
    });
    e.run_until(5.0);
    CHECK(seen == std::vector<std::string>{"int:first"});
    CHECK(e.trace().count("interrupt-dropped") == 1);
}

TEST_CASE("interrupting a terminated process has no effect") {
    Engine e;
    std::vector<double> log;
    const ProcessId pid = e.spawn("pu0", ticker(e, log, 1));
    e.run_until(5.0);
    REQUIRE(e.state(pid) == ProcessState::terminated);
    const auto rows = e.trace().size();
    e.interrupt(pid, "late");
    CHECK(e.trace().size() == rows);
}

TEST_CASE("activate wakes a passivated process") {
    Engine e;
    std::vector<std::string> seen;
    const ProcessId pid = e.spawn("x", sleeper(e, seen));
    e.schedule(3.0, {}, [&] { e.activate(pid); });
    e.run_until(5.0);
    CHECK(seen == std::vector<std::string>{"woken"});
}

TEST_CASE("spawn on a down owner fails") {
    Engine e;
    e.set_owner_check([](std::string_view owner) { return owner != "dead"; });
    std::vector<double> log;
    CHECK_THROWS_AS(e.spawn("dead", ticker(e, log, 1)), OwnerDownError);
    CHECK_NOTHROW(e.spawn("alive", ticker(e, log, 1)));
}

TEST_CASE("interrupt_owned stops every process of an owner") {
    Engine e;
    std::vector<double> a, b, c;
    e.spawn("pu0", ticker(e, a, 10));
    e.spawn("pu0", ticker(e, b, 10));
    e.spawn("pu1", ticker(e, c, 10));
    e.schedule(2.5, {}, [&] { CHECK(e.interrupt_owned("pu0", "crash") == 2); });
    e.run_until(100.0);
    CHECK(a == std::vector<double>{1.0, 2.0, -2.5});
    CHECK(b == std::vector<double>{1.0, 2.0, -2.5});
    CHECK(c.size() == 10);
}

TEST_CASE("sampling: bounds and reproducibility") {
    SeededRng rng(42);
    for (int i = 0; i < 10000; ++i) {
        const double u = sample(rng, Distribution::uniform(0.0, 1.0));
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    SeededRng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const Distribution d = (i % 2) ? Distribution::poisson(7.0) : Distribution::gaussian(1.0, 2.0);
        REQUIRE(sample(a, d) == sample(b, d));
    }
    CHECK_THROWS_AS(sample(rng, Distribution::exponential(0.0)), BadParams);
    CHECK_THROWS_AS(sample(rng, Distribution::uniform(2.0, 1.0)), BadParams);
    CHECK_THROWS_AS(sample(rng, Distribution::binomial(10, 1.5)), BadParams);
}

TEST_CASE("exponential empirical mean within three standard errors") {
    SeededRng rng(7);
    const double theta = 100.0;
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += sample(rng, Distribution::exponential(theta));
    }
    CHECK(std::abs(sum / n - theta) < 3.0 * theta / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("substreams are keyed, not positional") {
    Engine e(5);
    SeededRng a1 = e.substream("A.pu0");
    SeededRng b = e.substream("B.pu0");
    SeededRng a2 = e.substream("A.pu0");
    const auto x = a1.next_u64();
    CHECK(x == a2.next_u64());
    CHECK(x != b.next_u64());
}

TEST_CASE("mean-matched distributions") {
    for (Family f : {Family::exponential, Family::gaussian, Family::uniform, Family::binomial,
                     Family::poisson}) {
        const Distribution d = Distribution::with_mean(f, 50.0, 5.0);
        CHECK(d.mean() == doctest::Approx(50.0));
    }
}
