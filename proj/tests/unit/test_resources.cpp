#include <cmath>
#include <random>

#include "doctest.h"

#include "depsim/resources/compute.hpp"
#include "depsim/resources/database.hpp"
#include "depsim/resources/network.hpp"
#include "depsim/resources/topology.hpp"
#include "../support/fair_share_oracle.hpp"
#include "../support/topologies.hpp"

using namespace depsim;

namespace {

struct Net {
    Engine engine{7};
    ComponentRegistry registry;
    Topology topo{registry};
    Network net{engine, topo, registry};
};

/// One center with two PUs behind a LAN of the given capacity.
void one_center(Net& n, double lan_bps, double latency = 0.0) {
    n.topo.add_center("A", lan_bps, latency);
    n.topo.attach("A.pu0", ComponentKind::processing_unit, "A");
    n.topo.attach("A.pu1", ComponentKind::processing_unit, "A");
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("route within a center is the LAN") {
    Net n;
    one_center(n, 1e9);
    CHECK(n.topo.route("A.pu0", "A.pu1") == std::vector<std::string>{"A.lan"});
    CHECK(n.topo.route("A.pu0", "A.pu0").empty());
}

TEST_CASE("routes between centers cross a router") {
    Net n;
    testsupport::four_centers(n.topo);
    for (const char* a : {"A", "B", "C", "D"}) {
        for (const char* b : {"A", "B", "C", "D"}) {
            if (std::string(a) == b) continue;
            const auto path = n.topo.route(std::string(a) + ".pu0", std::string(b) + ".pu0");
            CHECK(!n.topo.routers_on(path).empty());
        }
    }
    CHECK(n.topo.route("A.pu0", "C.pu0") ==
          std::vector<std::string>{"A.lan", "A-R1", "R1-R2", "C-R2", "C.lan"});
    CHECK(n.topo.latency(n.topo.route("A.pu0", "C.pu0")) == doctest::Approx(0.04));
}

TEST_CASE("crashed router makes the destination unreachable") {
    Net n;
    testsupport::four_centers(n.topo);
    n.registry.set_crashed("R2", false);
    CHECK_THROWS_AS((void)n.topo.route("A.pu0", "C.pu0"), NoRoute);
    CHECK(n.topo.eventually_routable("A.pu0", "C.pu0"));
    n.registry.set_crashed("R2", true);
    CHECK_FALSE(n.topo.eventually_routable("A.pu0", "C.pu0"));
    CHECK_NOTHROW((void)n.topo.route("A.pu0", "B.pu0"));
}

TEST_CASE("equal-length routes are chosen by smallest link id") {
    Net n;
    n.topo.add_center("A", 1e9, 0.0);
    n.topo.add_center("B", 1e9, 0.0);
    n.topo.add_router("X");
    n.topo.add_router("Y");
    n.topo.add_link({"a-y", "A", "Y", 1e9, 0.0});
    n.topo.add_link({"y-b", "Y", "B", 1e9, 0.0});
    n.topo.add_link({"a-x", "A", "X", 1e9, 0.0});
    n.topo.add_link({"x-b", "X", "B", 1e9, 0.0});
    CHECK(n.topo.route("A", "B") == std::vector<std::string>{"A.lan", "a-x", "x-b", "B.lan"});
    n.registry.set_crashed("X", false);
    CHECK(n.topo.route("A", "B") == std::vector<std::string>{"A.lan", "a-y", "y-b", "B.lan"});
}

TEST_CASE("single transfer drains at bytes*8/capacity") {
    Net n;
    one_center(n, 1e9);
    double done = -1;
    n.net.start_transfer("A.pu0", "A.pu1", 1e9, [&](const Transfer& t) { done = t.finished; });
    n.engine.run_until(100);
    CHECK(done == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("two equal simultaneous transfers share the link") {
    Net n;
    one_center(n, 1e9);
    std::vector<double> done;
    for (int i = 0; i < 2; ++i) {
        n.net.start_transfer("A.pu0", "A.pu1", 1e9, [&](const Transfer& t) { done.push_back(t.finished); });
    }
    n.engine.run_until(1.0);
    CHECK(n.net.allocated("A.lan") == doctest::Approx(1e9));
    n.engine.run_until(100);
    REQUIRE(done.size() == 2);
    CHECK(done[0] == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(done[1] == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("zero-byte transfer completes after latency only") {
    Net n;
    one_center(n, 1e9, 0.25);
    double done = -1;
    n.net.start_transfer("A.pu0", "A.pu1", 0.0, [&](const Transfer& t) { done = t.finished; });
    n.engine.run_until(10);
    CHECK(done == doctest::Approx(0.25));
}

TEST_CASE("random small instances match the piecewise oracle") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> cap(1e6, 1e9), size(1e4, 1e8), start(0.0, 0.5);
    for (int trial = 0; trial < 200; ++trial) {
        Net n;
        const double lan_a = cap(gen), lan_b = cap(gen), wan = cap(gen);
        n.topo.add_center("A", lan_a, 0.0);
        n.topo.add_center("B", lan_b, 0.0);
        n.topo.add_router("R");
        n.topo.add_link({"L", "A", "R", wan, 0.0});
        n.topo.attach("A.pu0", ComponentKind::processing_unit, "A");
        n.topo.attach("A.pu1", ComponentKind::processing_unit, "A");
        std::map<std::string, double> caps{{"A.lan", lan_a}, {"L", wan}};
        // Flows: A.pu0 -> A.pu1 uses {A.lan}; A.pu0 -> R uses {A.lan, L}; R -> A.pu1 likewise.
        const int count = 1 + trial % 3;
        std::vector<oracle::Flow> flows;
        std::vector<double> got(count, -1.0);
        for (int i = 0; i < count; ++i) {
            oracle::Flow f;
            f.start = start(gen);
            f.bytes = size(gen);
            const int shape = static_cast<int>(gen() % 3);
            std::string src = shape == 2 ? "R" : "A.pu0";
            std::string dst = shape == 0 ? "A.pu1" : shape == 1 ? "R" : "A.pu1";
            f.links = shape == 0 ? std::vector<std::string>{"A.lan"} : std::vector<std::string>{"A.lan", "L"};
            flows.push_back(f);
            n.engine.schedule(f.start, EventSpec{}, [&n, &got, i, src, dst, bytes = f.bytes] {
                n.net.start_transfer(src, dst, bytes, [&got, i](const Transfer& t) { got[i] = t.finished; });
            });
        }
        n.engine.run_until(1e6);
        const auto expect = oracle::completion_times(flows, caps);
        for (int i = 0; i < count; ++i) {
            CHECK(rel_err(got[i], expect[i]) < 1e-9);
        }
    }
}

TEST_CASE("allocated rates never exceed link capacity") {
    Net n;
    testsupport::four_centers(n.topo, 1e8, 1e9);
    std::mt19937_64 gen(5);
    const std::vector<std::string> pus{"A.pu0", "B.pu0", "C.pu0", "D.pu0"};
    for (int i = 0; i < 30; ++i) {
        const auto& s = pus[gen() % 4];
        const auto& d = pus[gen() % 4];
        const double at = static_cast<double>(gen() % 1000) / 100.0;
        const double bytes = 1e6 * static_cast<double>(1 + gen() % 50);
        n.engine.schedule(at, EventSpec{}, [&n, s, d, bytes] { n.net.start_transfer(s, d, bytes); });
    }
    for (double t = 0.05; t < 60.0; t += 0.1) {
        n.engine.run_until(t);
        for (const auto& l : n.topo.link_ids()) {
            CHECK(n.net.allocated(l) <= n.topo.link(l).spec.capacity_bps * (1 + 1e-12));
            for (auto id : n.net.flows_on(l)) CHECK(n.net.transfer(id).rate_bps > 0.0);
        }
    }
    n.engine.run_until(1e6);
    CHECK(n.net.stats().delivered_bytes == doctest::Approx(n.net.stats().requested_bytes));
}

TEST_CASE("omission discards a fraction of the bytes in flight and re-sends them") {
    Net n;
    one_center(n, 8e6);
    double done = -1;
    const auto id = n.net.start_transfer("A.pu0", "A.pu1", 2e6, [&](const Transfer& t) { done = t.finished; });
    n.engine.schedule(1.0, EventSpec{}, [&] {
        n.net.omission("A.lan", 0.5);
        n.net.clear_omission("A.lan");
    });
    n.engine.run_until(100);
    CHECK(n.net.stats().lost_bytes == doctest::Approx(5e5));
    CHECK(n.net.transfer(id).retries_used == 1);
    CHECK(done == doctest::Approx(2.5));
    CHECK(n.net.stats().delivered_bytes == doctest::Approx(2e6));
}

TEST_CASE("persistent omission with limited retries fails the transfer") {
    Net n;
    one_center(n, 8e6);
    n.net.set_max_retries(2);
    n.net.omission("A.lan", 0.5);
    bool called = false;
    const auto id = n.net.start_transfer("A.pu0", "A.pu1", 1e6, [&](const Transfer&) { called = true; });
    n.engine.run_until(100);
    CHECK(called);
    CHECK(n.net.transfer(id).status == TransferStatus::failed);
    CHECK(n.net.transfer(id).retries_used == 3);
}

TEST_CASE("persistent omission with unlimited retries still delivers everything") {
    Net n;
    one_center(n, 8e6);
    n.net.set_max_retries(-1);
    n.net.omission("A.lan", 0.3);
    const auto id = n.net.start_transfer("A.pu0", "A.pu1", 1e6);
    n.engine.run_until(1e4);
    CHECK(n.net.transfer(id).status == TransferStatus::delivered);
    CHECK(n.net.stats().delivered_bytes == n.net.stats().requested_bytes);
}

TEST_CASE("transient link crash blocks then resumes a transfer") {
    Net n;
    testsupport::four_centers(n.topo, 8e6, 1e12);
    double done = -1;
    n.net.start_transfer("A.pu0", "C.pu0", 8e6, [&](const Transfer& t) { done = t.finished; });
    n.engine.schedule(2.0, EventSpec{}, [&] {
        n.registry.set_crashed("R1-R2", false);
        n.net.component_down("R1-R2");
    });
    n.engine.schedule(5.0, EventSpec{}, [&] {
        n.registry.set_operational("R1-R2");
        n.net.component_up("R1-R2");
    });
    n.engine.run_until(100);
    // 8 s of transmission at 8 Mb/s, 3 s outage, 0.04 s path latency.
    CHECK(done == doctest::Approx(11.04));
    CHECK(n.engine.trace().count("transfer-blocked") == 1);
}

TEST_CASE("permanent crash on the only path fails the transfer and loses the rest") {
    Net n;
    testsupport::four_centers(n.topo, 8e6, 1e12);
    const auto id = n.net.start_transfer("A.pu0", "C.pu0", 8e6);
    n.engine.schedule(2.0, EventSpec{}, [&] {
        n.registry.set_crashed("R2", true);
        n.net.component_down("R2");
    });
    n.engine.run_until(100);
    CHECK(n.net.transfer(id).status == TransferStatus::failed);
    CHECK(n.net.stats().lost_bytes == doctest::Approx(6e6));
}

TEST_CASE("transfer start without a route counts all bytes as lost") {
    Net n;
    testsupport::four_centers(n.topo);
    n.registry.set_crashed("R2", true);
    CHECK_THROWS_AS(n.net.start_transfer("A.pu0", "C.pu0", 100), NoRoute);
    CHECK(n.net.stats().lost_bytes == 100);
}

TEST_CASE("timing fault postpones delivery") {
    Net n;
    one_center(n, 8e6, 1.0);
    double done = -1;
    n.net.start_transfer("A.pu0", "A.pu1", 1e6, [&](const Transfer& t) { done = t.finished; });
    n.engine.schedule(1.5, EventSpec{}, [&] { n.net.delay_flows("A.lan", 5.0); });
    n.engine.run_until(100);
    CHECK(done == doctest::Approx(7.0));
}

TEST_CASE("cancelled transfer frees its share") {
    Net n;
    one_center(n, 1e9);
    double done = -1;
    const auto a = n.net.start_transfer("A.pu0", "A.pu1", 1e9);
    n.net.start_transfer("A.pu0", "A.pu1", 1e9, [&](const Transfer& t) { done = t.finished; });
    n.engine.schedule(4.0, EventSpec{}, [&] { n.net.cancel(a, "timeout"); });
    n.engine.run_until(100);
    // 4 s at 0.5 Gb/s moves 2.5e8 bytes; the remaining 7.5e8 take 6 s alone.
    CHECK(done == doctest::Approx(10.0));
}

TEST_CASE("job completes after work/power") {
    Engine e;
    ComponentRegistry reg;
    reg.add("A.pu0", ComponentKind::processing_unit, "A");
    ComputeCluster cpu(e, reg);
    cpu.add_pu({"A.pu0", "A", 50.0, 1, ""});
    double done = -1;
    cpu.execute("j1", "A.pu0", 100.0, [&](const Execution&) { done = e.now(); });
    CHECK_THROWS_AS(cpu.execute("j2", "A.pu0", 1.0, {}), NoSlot);
    e.run_until(1.0);
    CHECK(cpu.work_done("j1") == doctest::Approx(50.0));
    e.run_until(10);
    CHECK(done == 2.0);
    CHECK(e.trace().count("job-finish") == 1);
}

TEST_CASE("crashed PU rejects work and interrupts running jobs") {
    Engine e;
    ComponentRegistry reg;
    reg.add("p", ComponentKind::processing_unit, "A");
    ComputeCluster cpu(e, reg);
    cpu.add_pu({"p", "A", 1.0, 3, ""});
    bool finished = false;
    for (const char* j : {"a", "b", "c"}) cpu.execute(j, "p", 10.0, [&](const Execution&) { finished = true; });
    e.schedule(4.0, EventSpec{}, [&] {
        reg.set_crashed("p", false);
        CHECK(cpu.crash("p").size() == 3);
    });
    e.run_until(100);
    CHECK_FALSE(finished);
    CHECK(e.trace().count("interrupt") == 3);
    CHECK_THROWS_AS(cpu.execute("d", "p", 1.0, {}), PuDown);
}

TEST_CASE("timing fault on a PU shifts job completion") {
    Engine e;
    ComponentRegistry reg;
    reg.add("p", ComponentKind::processing_unit, "A");
    ComputeCluster cpu(e, reg);
    cpu.add_pu({"p", "A", 1.0, 1, ""});
    double done = -1;
    cpu.execute("j", "p", 10.0, [&](const Execution&) { done = e.now(); });
    e.schedule(3.0, EventSpec{}, [&] { cpu.delay("p", 5.0); });
    e.run_until(100);
    CHECK(done == 15.0);
}

TEST_CASE("database op delay is base latency plus size over throughput") {
    ComponentRegistry reg;
    reg.add("A.db0", ComponentKind::database, "A");
    reg.add("A.st0", ComponentKind::storage, "A");
    DatabaseService db(reg);
    db.add({"A.db0", "A", 0.01, 1e8, false});
    db.add({"A.st0", "A", 0.005, 1e7, true});
    CHECK(db.serve("A.db0", "write", 1e6).delay == doctest::Approx(0.02));
    CHECK(db.serve("A.db0", "read", 0).delay == doctest::Approx(0.01));
    CHECK_THROWS_AS(db.serve("A.st0", "query", 10), std::invalid_argument);
    db.corrupt_next("A.db0");
    CHECK_FALSE(db.serve("A.db0", "write", 1).wrong_value);
    CHECK(db.serve("A.db0", "query", 1).wrong_value);
    CHECK_FALSE(db.serve("A.db0", "query", 1).wrong_value);
    reg.set_crashed("A.db0", false);
    CHECK_THROWS_AS(db.serve("A.db0", "read", 1), ServerDown);
}
