#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "depsim/scenario/config.hpp"
#include "depsim/scenario/simulation.hpp"

using namespace depsim;

namespace {

const std::string kScenarios = DEPSIM_SCENARIO_DIR;

const char* kMinimal = R"(
[engine]
horizon_s = 100

[center A]
pu.count = 1

[activity one]
op = job
work = 5
center = A
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double pick(SeededRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }

/// A random but valid config: centers on a star around one router, with
/// faults and activities on existing components.
ScenarioConfig random_config(std::uint64_t seed) {
    SeededRng rng(seed);
    ScenarioConfig c;
    c.name = "random";
    c.engine.seed = rng.below(1000);
    c.engine.horizon_s = pick(rng, 100, 5000);
    c.engine.metric_window_s = pick(rng, 0.5, 20);
    c.engine.network_max_retries = static_cast<int>(rng.below(5)) - 1;
    c.engine.policy = std::array{PlanPolicy::baseline, PlanPolicy::etf, PlanPolicy::mcp}[rng.below(3)];
    c.engine.reschedule = rng.below(2) == 1;
    c.routers.push_back({"R", 0});
    const auto centers = 1 + rng.below(4);
    for (std::size_t i = 0; i < centers; ++i) {
        CenterConfig cc;
        cc.name = std::string(1, static_cast<char>('A' + i));
        cc.lan_capacity_bps = pick(rng, 1e6, 1e10);
        cc.lan_latency_s = pick(rng, 0, 0.01);
        cc.pus = 1 + static_cast<int>(rng.below(4));
        cc.pu_power_wups = pick(rng, 0.1, 10);
        if (rng.below(2)) cc.db = ServerConfig{pick(rng, 0, 0.1), pick(rng, 1e6, 1e9)};
        if (rng.below(2)) cc.storage = ServerConfig{};
        c.centers.push_back(cc);
        c.links.push_back({cc.name + "-R", cc.name, "R", pick(rng, 1e6, 1e9), pick(rng, 0, 0.1), 0});
        FaultConfig f;
        f.component = cc.name + ".pu0";
        f.type = rng.below(2) ? FaultType::crash : FaultType::timing;
        f.mttf_s = pick(rng, 10, 1000);
        if (f.type == FaultType::crash) {
            f.mttr_s = pick(rng, 1, 100);
        } else {
            f.delay_s = pick(rng, 1, 50);
        }
        c.faults.push_back(f);
        ActivityConfig a;
        a.name = "jobs" + cc.name;
        a.pattern = {ArrivalKind::poisson, pick(rng, 0.001, 1), -1, 0.0, pick(rng, 1, c.engine.horizon_s)};
        a.work = pick(rng, 1, 100);
        a.center = cc.name;
        if (rng.below(2)) a.timeout_s = pick(rng, 10, 200);
        c.activities.push_back(a);
    }
    FaultConfig omission;
    omission.component = "A-R";
    omission.type = FaultType::omission;
    omission.mttf_s = pick(rng, 10, 1000);
    omission.mttr_s = pick(rng, 1, 100);
    omission.loss_fraction = pick(rng, 0, 1);
    c.faults.push_back(omission);
    return c;
}

}  // namespace

TEST_CASE("reference scenarios survive a write/parse round trip") {
    for (const std::string name : {"net-faults-4centers", "dag-ft", "vo-attack"}) {
        CAPTURE(name);
        const auto c = load_scenario(kScenarios + "/" + name + ".scn");
        CHECK(c.name == name);
        const auto text = write_scenario(c);
        const auto back = parse_scenario(text, name);
        CHECK(back == c);
        CHECK(write_scenario(back) == text);
    }
}

TEST_CASE("random configs survive a write/parse round trip") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        CAPTURE(seed);
        const auto c = random_config(seed);
        REQUIRE_NOTHROW(validate(c));
        CHECK(parse_scenario(write_scenario(c), "random") == c);
    }
}

TEST_CASE("unknown key is reported with its path and line") {
    const std::string text = "[center A]\npu.count = 2\npu.powerr = 3\n";
    try {
        (void)parse_scenario(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(e.diagnostics().size() == 1);
        CHECK(e.diagnostics()[0].path == "center A.pu.powerr");
        CHECK(e.diagnostics()[0].line == 3);
    }
}

TEST_CASE("every diagnostic is collected before throwing") {
    const std::string text = R"(
[center A]
pu.power_wups = -1

[link A-X]
a = A
b = X

[fault Q.pu0]
type = crash
)";
    try {
        (void)parse_scenario(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.diagnostics().size() >= 3);
    }
}

TEST_CASE("malformed text raises ParseError with the line") {
    CHECK_THROWS_AS((void)parse_scenario("[center A\n"), ParseError);
    CHECK_THROWS_AS((void)parse_scenario("pu.count = 1\n"), ParseError);
    try {
        (void)parse_scenario("[engine]\nseed = 1\nnot a pair\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("missing scenario file is reported") {
    CHECK_THROWS_AS((void)load_scenario("/nonexistent/x.scn"), std::runtime_error);
}

TEST_CASE("minimal scenario runs one job to completion") {
    Simulation sim(parse_scenario(kMinimal, "minimal"));
    const auto& r = sim.run();
    CHECK(r.run_id == "minimal-s42");
    CHECK(r.submitted == 1);
    CHECK(r.finished == 1);
    CHECK(r.failed == 0);
    CHECK(r.rescheduled == 0);
    CHECK(r.lost_bytes == 0.0);
    CHECK_THROWS((void)sim.run());
}

TEST_CASE("fault-free transfers lose nothing and never reschedule") {
    auto c = load_scenario(kScenarios + "/net-faults-4centers.scn");
    c.faults.clear();
    Simulation sim(c);
    const auto& r = sim.run();
    CHECK(r.lost_bytes == 0.0);
    CHECK(r.rescheduled == 0);
    CHECK(sim.network().stats().delivered > 0);
    CHECK(r.mean_transfer_time > 0.0);
}

TEST_CASE("a cross-center route passes through a router") {
    const auto c = load_scenario(kScenarios + "/net-faults-4centers.scn");
    Simulation sim(c);
    const auto path = sim.topology().route("A.storage", "C.storage");
    bool via_router = false;
    for (const auto& hop : path) {
        via_router = via_router || hop.find("R1") != std::string::npos || hop.find("R2") != std::string::npos;
    }
    CHECK(via_router);
}

TEST_CASE("same seed gives identical reports, different seeds differ") {
    auto c = load_scenario(kScenarios + "/dag-ft.scn");
    Simulation a(c), b(c);
    CHECK(a.run() == b.run());
    c.engine.seed = 7;
    Simulation d(c);
    CHECK(!(d.run() == a.report()));
}

TEST_CASE("export writes three deterministic files") {
    const auto dir = std::filesystem::temp_directory_path() / "depsim-unit-export";
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
        Simulation sim(parse_scenario(kMinimal, "minimal"));
        sim.run();
        std::filesystem::remove_all(dir);
        export_run(sim, dir.string());
        const auto report = slurp(dir / "report.csv");
        CHECK(report.rfind(report_header(), 0) == 0);
        const auto all = slurp(dir / "metrics.csv") + report + slurp(dir / "trace.csv");
        if (rep == 0) {
            first = all;
        } else {
            CHECK(all == first);
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("metrics export of an empty store is the header alone") {
    MetricsStore empty;
    RunReport r;
    CHECK(metrics_csv(empty, r) == "run_id,seed,time,metric,component,value\n");
}

TEST_CASE("writing to an unwritable path raises IoError") {
    CHECK_THROWS_AS(write_file("/nonexistent/dir/file.csv", "x"), IoError);
}
