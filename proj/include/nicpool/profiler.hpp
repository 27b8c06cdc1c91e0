#pragma once

#include <string>
#include <vector>

#include "nicpool/engine.hpp"

namespace nicpool {

struct Profile {
    std::string app_id;
    double lambda_gbps = 0.0;                // single-pipeline saturated throughput
    std::vector<double> stage_latency_us;    // mean charged service time per stage
    double pipeline_latency_us = 0.0;        // unloaded end-to-end latency
};

struct ProfileOptions {
    int packet_bytes = 1500;
    SimTime warmup = 10 * kMsec;
    SimTime window = 100 * kMsec;
    int probe_packets = 64;
    EngineConfig engine;  // overheads and seed used for the measurement runs
};

// Offline profiling: runs the dataplane on a cluster snapshot with a single
// minimal pipeline under saturating traffic, then probes unloaded latency.
// Deterministic for a fixed seed. Throws InsufficientForProfiling when the
// minimal allocation cannot be placed.
Profile profile_app(const AppSpec& app, const Cluster& snapshot, const UcfRegistry* registry,
                    const ProfileOptions& opts);

// End-to-end throughput of one R-replicated copy, used as `t` in the
// allocation formula.
double measure_replicated_gbps(const AppSpec& app, const ReplicationPlan& plan,
                               const Cluster& snapshot, const UcfRegistry* registry,
                               const ProfileOptions& opts);

}  // namespace nicpool
