#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nicpool/dataplane.hpp"

namespace nicpool {

// "pipeline identifier": which lane of which sub-pipeline on which NIC.
struct PipelineIdentifier {
    std::string app_id;
    NicId nic = -1;
    LaneRef lane;
    int subpipe_seq = 0;  // == lane.range_idx

    bool valid() const { return lane.valid(); }
};

struct FlowTableEntry {
    FiveTuple flow;
    std::vector<LaneRef> pinned;                  // ingress lanes; >1 after spill
    std::map<LaneRef, std::int64_t> load_share;   // packets routed per lane
    std::map<LaneRef, std::int64_t> inflight;     // per-lane in-flight, drives drains
    std::map<std::pair<int, int>, LaneRef> range_pins;  // (group, range) -> lane
    SimTime last_seen = 0;

    // lazy migration
    bool migrating = false;
    LaneRef migrate_dst;
    std::deque<Packet> migration_buffer;

    std::int64_t inflight_total() const {
        std::int64_t n = 0;
        for (auto& [ref, c] : inflight) n += c;
        return n;
    }
};

// Snapshot of one candidate lane, supplied by the engine at decision time.
struct LaneView {
    LaneRef ref;
    NicId nic = 0;
    int free_slots = 0;
    int capacity = 1;
    bool accepting = true;
};

struct RouteDecision {
    LaneRef lane;          // invalid => drop
    bool new_entry = false;
    bool spilled = false;
    NicId nic = -1;

    PipelineIdentifier identifier(const std::string& app_id) const {
        return PipelineIdentifier{app_id, nic, lane, lane.range_idx};
    }
};

// Per-NIC traffic orchestrator: per-application flow tables, ingress and
// hop routing, migration bookkeeping. Pure decision logic; the engine owns
// rings and transfers.
class TrafficOrchestrator {
public:
    explicit TrafficOrchestrator(NicId nic = 0) : nic_(nic) {}

    NicId nic() const { return nic_; }

    FlowTableEntry& entry(const std::string& app, const FiveTuple& flow);
    FlowTableEntry* entry_if(const std::string& app, const FiveTuple& flow);
    std::map<FiveTuple, FlowTableEntry>& table(const std::string& app) { return tables_[app]; }

    // Flow-affine ingress: existing flows stay pinned below the watermark,
    // spill to the emptiest lane at the watermark; new flows go to the lane
    // with the most available capacity.
    RouteDecision route_ingress(const std::string& app, const FiveTuple& flow,
                                const std::vector<LaneView>& lanes, double high_watermark,
                                SimTime now);

    // Hop routing into sub-pipeline `range` of `group`: reuse the pinned
    // lane, else pin the lane with most available capacity.
    RouteDecision route_range(const std::string& app, const FiveTuple& flow, int group, int range,
                              const std::vector<LaneView>& lanes, SimTime now);

    void forget_lane(const std::string& app, const LaneRef& lane);
    void drop_app(const std::string& app) { tables_.erase(app); }

    std::int64_t redirections = 0;
    std::int64_t drops = 0;
    std::int64_t migrations_started = 0;

private:
    NicId nic_;
    std::map<std::string, std::map<FiveTuple, FlowTableEntry>> tables_;
};

}  // namespace nicpool
