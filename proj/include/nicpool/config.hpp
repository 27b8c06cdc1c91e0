#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nicpool/controller.hpp"
#include "nicpool/engine.hpp"

namespace nicpool {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr int kConfigSchemaVersion = 1;

ClusterConfig parse_cluster_config(const Json& j);
ClusterConfig load_cluster_file(const std::string& path);

struct ScenarioAppConfig {
    std::string id;
    std::optional<std::string> builtin;      // bundled application name
    Json inline_spec;                        // used when builtin is absent
    std::vector<double> service_us;          // per-stage fixed latency
    std::vector<double> service_per_byte_us; // optional, matches stages
    double target_gbps = 1.0;
    std::optional<double> latency_us;
    bool latency_sensitive = false;
    bool failover = false;
    PlacementMode mode = PlacementMode::FineGrained;
    TrafficSpec traffic;
    SimTime submit_at = 0;
};

struct TimelineEvent {
    SimTime at = 0;
    enum class Kind { SetTarget, FailNic, RecoverNic, StopApp } kind = Kind::SetTarget;
    std::string app;
    std::string nic;
    double gbps = 0.0;
};

struct ScenarioConfig {
    std::string name;
    std::uint64_t seed = 1;
    SimTime run_length = 1 * kSec;
    SimTime bin_width = 100 * kMsec;
    ClusterConfig cluster;
    EngineConfig engine;
    ControllerConfig controller;
    SimTime profile_warmup = 10 * kMsec;
    SimTime profile_window = 100 * kMsec;
    int profile_probe_packets = 64;
    std::vector<ScenarioAppConfig> apps;
    std::vector<TimelineEvent> timeline;
};

ScenarioConfig parse_scenario_config(const Json& j, const std::string& base_dir);
ScenarioConfig load_scenario_file(const std::string& path);

}  // namespace nicpool
