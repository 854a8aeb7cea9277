// Command-line front end: run, validate and sweep scenario files.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "depsim/scenario/config.hpp"
#include "depsim/scenario/simulation.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> until;
    std::optional<std::string> policy;
    bool no_reschedule = false;
};

void apply(depsim::ScenarioConfig& c, const Overrides& o) {
    if (o.seed) c.engine.seed = *o.seed;
    if (o.until) c.engine.horizon_s = *o.until;
    if (o.policy) c.engine.policy = depsim::parse_plan_policy(*o.policy);
    if (o.no_reschedule) c.engine.reschedule = false;
    depsim::validate(c);
}

depsim::RunReport run_one(const depsim::ScenarioConfig& config, const std::string& out) {
    depsim::Simulation sim(config);
    sim.run();
    if (!out.empty()) depsim::export_run(sim, out);
    return sim.report();
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw CLI::ValidationError("--seeds", "expected A..B");
    const auto a = std::stoull(text.substr(0, dots));
    const auto b = std::stoull(text.substr(dots + 2));
    if (b < a) throw CLI::ValidationError("--seeds", "empty range");
    return {a, b};
}

template <typename F>
int guarded(F&& body) {
    try {
        body();
        return kOk;
    } catch (const depsim::ValidationError& e) {
        for (const auto& d : e.diagnostics()) {
            std::cerr << "line " << d.line << ": " << d.path << ": " << d.message << "\n";
        }
        return kInvalid;
    } catch (const depsim::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dependability simulator for large-scale distributed systems"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out;
    Overrides over;

    auto* run = app.add_subcommand("run", "Run one scenario and export its CSV files");
    run->add_option("scenario", scenario, "Scenario file")->required();
    run->add_option("--seed", over.seed, "Root seed");
    run->add_option("--until", over.until, "Horizon in simulated seconds");
    run->add_option("--out", out, "Output directory (nothing is written without it)");
    run->add_option("--policy", over.policy, "DAG policy")->check(CLI::IsMember({"baseline", "etf", "mcp"}));
    run->add_flag("--no-reschedule", over.no_reschedule, "Disable job rescheduling");

    auto* check = app.add_subcommand("validate", "Check a scenario file");
    check->add_option("scenario", scenario, "Scenario file")->required();

    std::string seeds;
    auto* sweep = app.add_subcommand("sweep", "Run a range of seeds");
    sweep->add_option("scenario", scenario, "Scenario file")->required();
    sweep->add_option("--seeds", seeds, "Seed range A..B")->required();
    sweep->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (*check) {
        return guarded([&] {
            const auto c = depsim::load_scenario(scenario);
            std::cout << c.name << ": ok\n";
        });
    }
    if (*run) {
        return guarded([&] {
            auto c = depsim::load_scenario(scenario);
            apply(c, over);
            const auto report = run_one(c, out);
            std::cout << depsim::report_header() << depsim::report_row(report);
        });
    }
    return guarded([&] {
        const auto [first, last] = parse_seed_range(seeds);
        auto c = depsim::load_scenario(scenario);
        std::string summary = depsim::report_header();
        for (std::uint64_t s = first; s <= last; ++s) {
            c.engine.seed = s;
            const auto dir = (std::filesystem::path(out) / ("seed-" + std::to_string(s))).string();
            summary += depsim::report_row(run_one(c, dir));
        }
        std::filesystem::create_directories(out);
        depsim::write_file((std::filesystem::path(out) / "report.csv").string(), summary);
        std::cout << summary;
    });
}
