#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nicpool/app_model.hpp"
#include "nicpool/cluster.hpp"
#include "nicpool/planner.hpp"

namespace nicpool {

struct PerfTarget {
    double throughput_gbps = 1.0;
    std::optional<double> latency_us;  // demand; profiled minimum is reported back when unmet
    bool latency_sensitive = false;
};

enum class PlacementMode { FineGrained, WholeNic };

// All replicas of one stage within one group live on a single NIC, one
// grant per resource unit so partial reclaim stays exact.
struct StageAlloc {
    int stage = 0;
    NicId nic = 0;
    int count = 0;
    std::vector<GrantId> grants;
};

// Contiguous slice of the chain on one NIC; lanes = max replica count over
// the slice, one set of rings per lane.
struct RangeInfo {
    NicId nic = 0;
    int lo = 0;
    int hi = 0;   // inclusive
    int lanes = 1;
};

struct GroupPlacement {
    int group_id = 0;  // stable across rescales within a deployment
    std::vector<RangeInfo> ranges;
    std::vector<StageAlloc> stages;  // one per chain stage

    int count_of(int stage) const { return stages[static_cast<size_t>(stage)].count; }
    std::vector<NicId> nic_chain() const;
    void recompute_lanes();
};

struct Placement {
    std::string app_id;
    bool latency_sensitive = false;
    bool best_effort = false;
    std::vector<GroupPlacement> groups;
    int next_group_id = 0;

    NicId anchor_nic() const { return groups.empty() ? -1 : groups.front().ranges.front().nic; }
    std::vector<long> per_stage_totals(size_t n_stages) const;
    bool touches(NicId nic) const;
    GroupPlacement* group_by_id(int id);
};

// Latency-sensitive apps land whole on a single NIC; others fill the most
// resourceful NIC and spill in chain order, creating a sub-pipeline boundary
// at every NIC switch. Accelerator stages go to NICs owning the kind, ranked
// by perf metric. Shortfall degrades to the largest feasible prefix of
// copies, flagged best-effort.
Placement place(const AppSpec& app, const AllocationPlan& alloc, Cluster& cluster,
                const PerfTarget& target, PlacementMode mode = PlacementMode::FineGrained);

struct GroupGrow {
    int group_id = 0;
    std::vector<StageAlloc> added;    // per stage, count may be 0
    std::vector<int> new_lanes;       // per range
};

struct GroupShrink {
    int group_id = 0;
    std::vector<int> remove_per_stage;
    std::vector<int> new_lanes;            // per range, after removal
    bool remove_group = false;
    std::vector<GrantId> reclaim_after_drain;
};

struct PlacementDelta {
    std::vector<GroupPlacement> add_groups;
    std::vector<GroupGrow> grows;
    std::vector<GroupShrink> shrinks;
    bool best_effort = false;

    bool empty() const { return add_groups.empty() && grows.empty() && shrinks.empty(); }
};

// Growth leaves existing assignments untouched (in-place pool growth when the
// group's NICs still have room, otherwise new groups). Shrink drains groups
// starting away from the anchor NIC; reclaim happens after the engine has
// drained and migrated pinned flows.
PlacementDelta rescale(const AppSpec& app, Placement& current, const AllocationPlan& new_alloc,
                       Cluster& cluster, const PerfTarget& new_target);

}  // namespace nicpool
