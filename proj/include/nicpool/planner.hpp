#pragma once

#include <span>
#include <vector>

#include "nicpool/cluster.hpp"
#include "nicpool/errors.hpp"
#include "nicpool/resource_kind.hpp"

namespace nicpool {

// Inclusive stage range; `hi` is the segment's minimum-latency stage.
struct Segment {
    int lo = 0;
    int hi = 0;
    bool operator==(const Segment&) const = default;
};

struct ReplicationPlan {
    std::vector<long> replicas;     // R, one per stage
    std::vector<Segment> segments;  // partition of the chain

    long pipeline_count() const {
        long m = 0;
        for (long r : replicas) m = std::max(m, r);
        return m;
    }
};

// Partial pipeline replication: split at the minimum-latency stage, scale
// every stage before it to that stage's processing capacity, recurse on the
// suffix. Ties pick the earliest index.
ReplicationPlan plan_replication(std::span<const double> latencies_us);

struct AllocationPlan {
    std::vector<long> per_stage_total;  // R_i * full_copies + remainder_units
    long full_copies = 0;               // floor(P / t)
    long remainder_units = 0;           // ceil((P - full_copies * t) / lambda)
    ResourceVector total_rv;
};

// Resource demand for throughput target P given the measured throughput t of
// one R-replicated copy and the baseline single-pipeline throughput lambda.
// `classes` maps each stage to its resource class; empty means all-CPU.
AllocationPlan compute_allocation(const ReplicationPlan& plan, double target_gbps,
                                  double measured_gbps, double lambda_gbps,
                                  std::span<const ResourceClass> classes = {});

}  // namespace nicpool
