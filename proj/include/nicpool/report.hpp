#pragma once

#include <string>

#include "nicpool/config.hpp"
#include "nicpool/controller.hpp"

namespace nicpool {

constexpr int kReportSchemaVersion = 1;

// Machine-readable scenario report; field order is fixed so identical runs
// serialize byte-identically.
OrderedJson build_report(const ScenarioConfig& cfg, const Cluster& cluster, const Engine& engine,
                         const Controller& controller);

void write_report(const OrderedJson& report, const std::string& path);

// Debugging dumps in the same report format: per-NIC flow tables with lane
// pins and load counters, and per-(NIC, app) state tables.
OrderedJson dump_flow_tables(Engine& engine, const Cluster& cluster,
                             const std::vector<std::string>& app_ids);
OrderedJson dump_state_tables(const StateFabric& fabric, const Cluster& cluster);

}  // namespace nicpool
