#pragma once

#include <set>
#include <string>
#include <vector>

#include "nicpool/app_model.hpp"
#include "nicpool/config.hpp"

namespace nicpool {

// Bundled applications: intrusion_detection, ipcomp_gateway, ipsec_gateway,
// firewall, flow_monitor, l7_load_balancer.
std::vector<std::string> builtin_app_names();

// UCFs used by the bundled applications.
void register_builtin_ucfs(UcfRegistry& registry);

// Builds a bundled application. `service_us` supplies the per-stage fixed
// latency model (required, one entry per stage); `per_byte_us` is optional.
AppSpec make_builtin_app(const std::string& name, const std::string& app_id,
                         const std::vector<double>& service_us,
                         const std::vector<double>& per_byte_us, const UcfRegistry& registry,
                         const std::set<AcceleratorKind>& vocabulary);

// Number of stages of a bundled application (for config validation).
size_t builtin_stage_count(const std::string& name);

// Builds an app from a scenario entry (builtin or inline stage list).
AppSpec build_scenario_app(const ScenarioAppConfig& cfg, const UcfRegistry& registry,
                           const std::set<AcceleratorKind>& vocabulary);

}  // namespace nicpool
