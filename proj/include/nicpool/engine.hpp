#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "nicpool/dataplane.hpp"
#include "nicpool/orchestrator.hpp"
#include "nicpool/placement.hpp"
#include "nicpool/state_engine.hpp"

namespace nicpool {

struct EngineConfig {
    int ring_capacity = 1024;
    double high_watermark = 0.8;       // spill threshold on ingress occupancy
    int batch_size = 32;               // packets per sequence-numbered batch
    double to_ingress_overhead_us = 0.3;
    double to_redirect_overhead_us = 0.3;
    int migration_buffer_pkts = 256;
    SimTime bin_width = 100 * kMsec;
    std::uint64_t seed = 1;
    double saturate_overdrive = 2.0;   // offered load vs analytic capacity
    size_t max_latency_samples = 1u << 20;
};

struct MigrationReport {
    FiveTuple flow;
    LaneRef src;
    LaneRef dst;
    std::int64_t cached = 0;
    std::int64_t overflow_drops = 0;
    bool cross_nic = false;
};

struct FailImpact {
    // ingress-form copies of every in-flight packet that died with the NIC
    std::map<std::string, std::vector<Packet>> died;
};

struct StagePoolSummary {
    int stage = 0;
    int servers = 0;
    std::int64_t busy_ns = 0;
    std::int64_t served = 0;
    std::int64_t service_ns = 0;
};

// Deterministic virtual-time execution engine. Single-threaded; every event
// ordering is (time, kind, schedule seq).
class Engine {
public:
    Engine(Cluster* cluster, StateFabric* fabric, const UcfRegistry* registry, EngineConfig cfg);

    // ---- deployment lifecycle ----
    void instantiate(const AppSpec& app, const Placement& placement);
    void attach_traffic(const std::string& app_id, const TrafficSpec& spec);
    void start_traffic(const std::string& app_id, SimTime at);
    void stop_traffic(const std::string& app_id);
    // teardown counts still-in-flight packets as terminal drops
    void teardown_app(const std::string& app_id);

    void apply_delta(const std::string& app_id, const PlacementDelta& delta);

    // ---- failover ----
    FailImpact nic_failed(NicId nic);          // at failure time: blackhole + classify in-flight
    void quarantine_nic(NicId nic);            // at detection: unpin, stop routing to it
    void replace_range(const std::string& app_id, int group_id, int range_idx, NicId backup,
                       const std::vector<StageAlloc>& replacement);
    void inject_ingress(const std::string& app_id, std::vector<Packet> packets, SimTime at);
    void count_loss(const std::string& app_id, const Packet& pkt, const std::string& reason);
    std::vector<Packet> inflight_snapshot(const std::string& app_id) const;

    // ---- flow migration (lazy) ----
    MigrationReport migrate_flow(const std::string& app_id, const FiveTuple& flow, LaneRef src,
                                 LaneRef dst);

    // ---- run ----
    void run_until(SimTime t);
    SimTime now() const { return now_; }
    void schedule(SimTime at, EventKind kind, std::function<void()> fn);
    bool drained(const std::string& app_id) const;
    std::int64_t reorder_held(const std::string& app_id) const;

    // ---- traffic helpers ----
    double analytic_capacity_gbps(const std::string& app_id) const;
    void refresh_saturate_rate(const std::string& app_id);

    // ---- introspection ----
    const AppStats& app_stats(const std::string& app_id) const;
    AppStats& app_stats_mut(const std::string& app_id);
    const NicStats& nic_stats(NicId nic) const;
    std::vector<StagePoolSummary> pool_summary(const std::string& app_id) const;
    int lane_count(const std::string& app_id) const;
    std::map<std::string, std::int64_t> ring_peaks(const std::string& app_id) const;
    TrafficOrchestrator& to(NicId nic);
    const EngineConfig& config() const { return cfg_; }
    std::vector<std::string> app_ids() const;
    const Placement* placement_of(const std::string& app_id) const;

    // test hook: observes every in-order release
    std::function<void(const std::string&, const Packet&)> release_probe;

private:
    struct RuntimeRange {
        NicId nic = 0;
        int lo = 0, hi = 0;
        bool alive = true;  // false after NIC failure until replaced
        std::uint64_t epoch = 0;  // bumped on rebuild; stale events check it
        std::vector<LaneRings> lanes;
        std::vector<bool> lane_dead;
        std::vector<StagePool> pools;  // rel stage -> pool

        int len() const { return hi - lo + 1; }
    };
    struct RuntimeGroup {
        int group_id = 0;
        bool alive = true;
        std::vector<RuntimeRange> ranges;
    };
    struct InFlightRec {
        Packet ingress_copy;
        enum class Loc : std::uint8_t { InLane, InTransfer, Buffered } loc = Loc::InLane;
        NicId nic = 0;
        LaneRef lane;
    };
    struct DrainTask {
        int group_id = 0;
        std::vector<LaneRef> lanes;
        std::vector<GrantId> grants;
        bool remove_group = false;
    };
    struct RuntimeApp {
        AppSpec spec;
        Placement placement;
        TrafficSpec traffic;
        bool traffic_attached = false;
        bool traffic_on = false;
        NicId anchor = 0;
        std::vector<RuntimeGroup> groups;
        EgressAggregator aggregator;
        AppStats stats;
        std::map<FiveTuple, FlowRecord> flow_records;
        SocketRegistry sockets;
        std::map<std::uint64_t, InFlightRec> inflight;
        std::vector<DrainTask> drain_tasks;

        // generator state
        std::vector<FiveTuple> flow_set;
        std::vector<std::int64_t> next_seq;
        size_t rr_flow = 0;
        double gen_rate_gbps = 1.0;
        std::int64_t next_batch_seq = 0;
        std::uint64_t gen_epoch = 0;
        std::uint64_t payload_rng = 1;
    };

    RuntimeApp& app(const std::string& id);
    const RuntimeApp& app(const std::string& id) const;
    RuntimeGroup* group_of(RuntimeApp& a, int group_id);
    RuntimeRange* range_of(RuntimeApp& a, const LaneRef& ref);
    LaneRings* lane_of(RuntimeApp& a, const LaneRef& ref);

    void build_group(RuntimeApp& a, const GroupPlacement& gp);
    void resolve_pool_models(RuntimeApp& a, const StageSpec& st, const StageAlloc& sa,
                             StagePool& pool);

    // traffic
    void generator_tick(const std::string& app_id, std::uint64_t epoch);
    Packet make_packet(RuntimeApp& a, size_t flow_idx);
    void to_partition(RuntimeApp& a, std::vector<Packet> batch);
    std::vector<LaneView> ingress_views(RuntimeApp& a) const;
    std::vector<LaneView> range_views(RuntimeApp& a, int group_id, int range_idx) const;

    // movement
    void accept_packet(RuntimeApp& a, Packet&& pkt, const RouteDecision& dec, bool replay);
    void ring_push(const std::string& app_id, LaneRef ref, Packet pkt);
    void try_dispatch(RuntimeApp& a, RuntimeGroup& g, RuntimeRange& r, int rel_stage);
    void on_stage_done(const std::string& app_id, LaneRef ref, int rel_stage, int server,
                       Packet pkt, StageResult result, std::uint64_t dispatch_epoch);
    void range_exit(RuntimeApp& a, RuntimeGroup& g, RuntimeRange& r, LaneRef ref, Packet&& pkt);
    void host_deliver(const std::string& app_id, Packet pkt);
    void drop_packet(RuntimeApp& a, Packet& pkt, const std::string& reason, bool had_entry);

    StageResult exec_in_pipeline(RuntimeApp& a, RuntimeRange& r, StagePool& pool,
                                 const StageSpec& st, Packet& pkt, SimTime& extra_cost);

    void note_lane_exit(RuntimeApp& a, const LaneRef& ref, const FiveTuple& flow);
    void check_drains(RuntimeApp& a);
    void maybe_complete_migration(RuntimeApp& a, FlowTableEntry& e);
    void poke_migration(RuntimeApp& a, const FiveTuple& flow);
    void complete_migration(RuntimeApp& a, FlowTableEntry& e);

    StateCtx& state_ctx(RuntimeApp& a, NicId nic);

    SimTime hop_cost(NicId from, NicId to, std::int64_t bytes) const;
    void bump_busy(NicId nic, const ResourceClass& rc, SimTime dur);

    Cluster* cluster_;
    StateFabric* fabric_;
    const UcfRegistry* registry_;
    EngineConfig cfg_;

    SimTime now_ = 0;
    std::uint64_t next_event_seq_ = 0;
    std::uint64_t next_uid_ = 1;
    std::priority_queue<SimEvent, std::vector<SimEvent>, SimEventOrder> events_;

    std::map<std::string, RuntimeApp> apps_;
    std::map<NicId, TrafficOrchestrator> tos_;
    std::map<NicId, NicStats> nic_stats_;
    std::map<std::pair<NicId, std::string>, std::unique_ptr<FabricStateCtx>> state_ctxs_;
    NullStateCtx null_ctx_;
};

}  // namespace nicpool
