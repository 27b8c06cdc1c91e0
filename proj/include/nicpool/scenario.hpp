#pragma once

#include <memory>
#include <string>

#include "nicpool/config.hpp"
#include "nicpool/controller.hpp"
#include "nicpool/examples_lib.hpp"
#include "nicpool/report.hpp"

namespace nicpool {

// Owns every moving part of one scenario run; kept alive so tests can poke
// at engine/controller state after run() finishes.
class ScenarioRunner {
public:
    explicit ScenarioRunner(ScenarioConfig cfg);

    void run();  // executes submissions and the timeline until run_length
    OrderedJson report() const;

    Engine& engine() { return *engine_; }
    StateFabric& fabric() { return *fabric_; }
    Controller& controller() { return *controller_; }
    Cluster& cluster() { return *cluster_; }
    const ScenarioConfig& config() const { return cfg_; }

private:
    ScenarioConfig cfg_;
    std::unique_ptr<UcfRegistry> registry_;
    std::unique_ptr<Cluster> cluster_;
    std::unique_ptr<StateFabric> fabric_;
    std::unique_ptr<Engine> engine_;
    std::unique_ptr<Controller> controller_;
};

// CLI entry: load, run, write the report; returns the report.
OrderedJson run_scenario_file(const std::string& config_path, const std::string& out_path,
                              std::optional<std::uint64_t> seed_override = {},
                              std::optional<double> bin_ms_override = {});

}  // namespace nicpool
