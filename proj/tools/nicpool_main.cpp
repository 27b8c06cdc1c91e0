// Command-line scenario runner and offline planner.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "nicpool/planner.hpp"
#include "nicpool/scenario.hpp"

using namespace nicpool;

static int cmd_run(const std::string& config, const std::string& out,
                   std::optional<std::uint64_t> seed, std::optional<double> bin_ms) {
    try {
        OrderedJson rep = run_scenario_file(config, out, seed, bin_ms);
        std::cout << "scenario '" << rep["scenario"].get<std::string>() << "' finished; report";
        if (!out.empty())
            std::cout << " written to " << out << "\n";
        else
            std::cout << ":\n" << rep.dump(2) << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

static int cmd_plan(const std::vector<double>& latencies, double target, double measured,
                    double lambda) {
    try {
        ReplicationPlan plan = plan_replication(latencies);
        std::cout << "replicas:";
        for (long r : plan.replicas) std::cout << ' ' << r;
        std::cout << "\nsegments:";
        for (const auto& s : plan.segments) std::cout << " [" << s.lo << ".." << s.hi << "]";
        std::cout << "\npipeline_count: " << plan.pipeline_count() << "\n";
        if (target > 0) {
            double t = measured > 0 ? measured : lambda;
            if (t <= 0 || lambda <= 0) {
                std::cerr << "error: plan with a target needs --measured/--lambda > 0\n";
                return 2;
            }
            AllocationPlan alloc = compute_allocation(plan, target, t, lambda);
            std::cout << "full_copies: " << alloc.full_copies << "\n";
            std::cout << "remainder_units: " << alloc.remainder_units << "\n";
            std::cout << "per_stage_total:";
            for (long n : alloc.per_stage_total) std::cout << ' ' << n;
            std::cout << "\ntotal_rv: " << alloc.total_rv.str() << "\n";
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

static int cmd_list_examples(const std::string& dir) {
    namespace fs = std::filesystem;
    std::cout << "bundled applications:\n";
    for (const auto& name : builtin_app_names()) std::cout << "  " << name << "\n";
    if (fs::exists(dir)) {
        std::cout << "scenarios in " << dir << ":\n";
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".json") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) std::cout << "  " << f << "\n";
    } else {
        std::cout << "(no scenario directory at '" << dir << "')\n";
    }
    return 0;
}

int main(int argc, char** argv) {
    CLI::App app{"Rack-scale SmartNIC pool simulator and planner"};
    app.require_subcommand(1);

    std::string config, out;
    std::uint64_t seed = 0;
    double bin_ms = 0;
    bool seed_set = false, bin_set = false;
    auto* run = app.add_subcommand("run", "run a scenario and write its metrics report");
    run->add_option("config", config, "scenario config (json)")->required();
    run->add_option("-o,--out", out, "report output path");
    run->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--bin-ms", bin_ms, "override the report bin width")->each([&](const std::string&) {
        bin_set = true;
    });

    std::vector<double> latencies;
    double target = 0, measured = 0, lambda = 0;
    auto* plan = app.add_subcommand("plan", "offline replication and allocation planning");
    plan->add_option("-L,--latency", latencies, "per-stage latencies (us)")->required();
    plan->add_option("-P,--target", target, "throughput target (Gbps)");
    plan->add_option("-t,--measured", measured, "measured throughput of one replicated copy (Gbps)");
    plan->add_option("--lambda", lambda, "baseline single-pipeline throughput (Gbps)");

    std::string dir = "scenarios";
    auto* list = app.add_subcommand("list-examples", "list bundled applications and scenarios");
    list->add_option("-d,--dir", dir, "scenario directory");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return cmd_run(config, out, seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                       bin_set ? std::optional<double>(bin_ms) : std::nullopt);
    if (plan->parsed()) return cmd_plan(latencies, target, measured, lambda);
    if (list->parsed()) return cmd_list_examples(dir);
    return 1;
}
