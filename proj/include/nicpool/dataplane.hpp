#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "nicpool/app_model.hpp"
#include "nicpool/cluster.hpp"
#include "nicpool/placement.hpp"
#include "nicpool/sim_time.hpp"

namespace nicpool {

// ============================================================
// Rings
// ============================================================

enum class RingRole : std::uint8_t { Ingress, InterStage, Egress };

// Strict FIFO with fixed capacity. Single producer / single consumer is a
// property of the surrounding wiring: each ring is filled by exactly one
// upstream party and drained by one stage pool.
class RingBuffer {
public:
    RingBuffer() = default;
    RingBuffer(RingRole role, int capacity) : role_(role), capacity_(capacity) {}

    bool full() const { return static_cast<int>(slots_.size()) >= capacity_; }
    bool empty() const { return slots_.empty(); }
    int size() const { return static_cast<int>(slots_.size()); }
    int capacity() const { return capacity_; }
    int free_slots() const { return capacity_ - size(); }
    RingRole role() const { return role_; }
    int peak() const { return peak_; }

    bool push(Packet&& p) {
        if (full()) return false;
        slots_.push_back(std::move(p));
        peak_ = std::max(peak_, size());
        return true;
    }
    Packet pop() {
        Packet p = std::move(slots_.front());
        slots_.pop_front();
        return p;
    }
    std::deque<Packet>& slots() { return slots_; }

private:
    RingRole role_ = RingRole::Ingress;
    int capacity_ = 1024;
    std::deque<Packet> slots_;
    int peak_ = 0;
};

// Dedicated rings of one pipeline lane within a sub-pipeline range:
// ingress -> stage lo -> inter[0] -> ... -> stage hi -> egress.
struct LaneRings {
    RingBuffer ingress;
    std::vector<RingBuffer> inter;
    RingBuffer egress;
    std::int64_t inflight = 0;  // packets currently inside this lane's range
    bool accepting = true;      // false while draining for removal

    RingBuffer& input_of(int rel_stage) {
        return rel_stage == 0 ? ingress : inter[static_cast<size_t>(rel_stage - 1)];
    }
    RingBuffer& output_of(int rel_stage, int range_len) {
        return rel_stage == range_len - 1 ? egress : inter[static_cast<size_t>(rel_stage)];
    }
};

// Identifies one pipeline lane: (group, sub-pipeline range, lane index).
struct LaneRef {
    int group_id = -1;
    int range_idx = -1;
    int lane_idx = -1;

    auto operator<=>(const LaneRef&) const = default;
    bool valid() const { return group_id >= 0; }
    std::string str() const {
        return "g" + std::to_string(group_id) + "/r" + std::to_string(range_idx) + "/p" +
               std::to_string(lane_idx);
    }
};

// ============================================================
// Stage server pools
// ============================================================

// Replicated servers of one stage within one group-range, shared across the
// range's lanes (round-robin over non-empty input rings).
struct StagePool {
    int stage = 0;  // global chain index
    std::vector<ServiceModel> server_models;
    std::vector<SimTime> busy_until;
    std::vector<bool> busy;
    int active_servers = 0;   // <= server count; shrink retires from the top
    size_t rr_cursor = 0;

    // window state for flow_ext stages, keyed per flow
    std::map<FiveTuple, std::deque<Packet>> windows;
    std::map<FiveTuple, std::int64_t> window_counts;

    // stats
    std::int64_t served = 0;
    std::int64_t busy_ns = 0;
    std::int64_t service_ns = 0;

    int free_server() const {
        for (int i = 0; i < active_servers; ++i)
            if (!busy[static_cast<size_t>(i)]) return i;
        return -1;
    }
    int busy_count() const {
        int n = 0;
        for (int i = 0; i < active_servers; ++i) n += busy[static_cast<size_t>(i)] ? 1 : 0;
        return n;
    }
};

// ============================================================
// Events
// ============================================================

enum class EventKind : std::uint8_t { Control = 0, StageDone = 1, TransferDone = 2, Arrival = 3, Tick = 4 };

struct SimEvent {
    SimTime time = 0;
    EventKind kind = EventKind::Control;
    std::uint64_t seq = 0;  // monotonic, breaks ties deterministically
    std::function<void()> fn;
};

struct SimEventOrder {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

// ============================================================
// Traffic
// ============================================================

enum class PayloadFill : std::uint8_t { None, Zeros, Seeded };

struct TrafficSpec {
    int flows = 1;
    int packet_bytes = 1500;
    bool saturate = false;      // closed-loop overdrive of the current capacity
    double rate_gbps = 1.0;     // used when !saturate
    PayloadFill fill = PayloadFill::None;
    std::uint64_t seed = 1;
};

// ============================================================
// Stats
// ============================================================

struct AppStats {
    std::int64_t generated = 0;
    std::int64_t accepted = 0;       // entered some ingress ring
    std::int64_t released = 0;       // delivered to host in order
    std::int64_t released_bits = 0;  // ingress-size bits of released packets
    std::int64_t duplicates = 0;     // failover replays already delivered
    std::int64_t emitted_flow_records = 0;
    std::int64_t ucf_panics = 0;
    std::map<std::string, std::int64_t> drops;  // by reason
    std::int64_t order_violations = 0;

    std::vector<SimTime> latency_samples;
    std::int64_t latency_count = 0;
    SimTime latency_sum = 0;
    int sample_stride = 1;  // decimation keeps memory bounded deterministically

    std::map<std::int64_t, std::int64_t> bin_bits;   // bin index -> released bits
    std::map<std::int64_t, std::int64_t> bin_drops;

    std::int64_t total_drops() const {
        std::int64_t n = 0;
        for (auto& [k, v] : drops) n += v;
        return n;
    }
};

struct NicStats {
    std::int64_t cpu_busy_ns = 0;
    std::map<AcceleratorKind, std::int64_t> accel_busy_ns;
    std::int64_t redirections = 0;
    std::int64_t to_drops = 0;
    std::int64_t migrations = 0;
};

struct LatencySummary {
    double avg_us = 0, p50_us = 0, p90_us = 0, p99_us = 0;
    std::int64_t count = 0;
};

LatencySummary summarize_latency(std::vector<SimTime> samples, std::int64_t count, SimTime sum);

// ============================================================
// Per-flow in-order delivery at the host boundary
// ============================================================

// Releases each flow's packets in (batch_seq, flow_seq) order; a packet
// waits until every lower sequence of its flow is released or dropped.
class EgressAggregator {
public:
    struct Release {
        Packet pkt;
        SimTime at;
    };

    // returns packets released by this delivery, in order
    std::vector<Release> on_delivered(Packet&& pkt, SimTime now, AppStats& stats);
    // a drop frees its sequence slot; held successors may release
    std::vector<Release> on_dropped(const FiveTuple& flow, std::int64_t flow_seq, SimTime now,
                                    AppStats& stats);
    bool is_delivered(const FiveTuple& flow, std::int64_t flow_seq) const;
    std::int64_t held_count() const;

private:
    struct FlowState {
        std::int64_t next_seq = 0;
        std::map<std::int64_t, Packet> held;  // key: flow_seq
        std::map<std::int64_t, std::int64_t> held_batch;  // flow_seq -> batch_seq (order check)
        std::set<std::int64_t> freed;
        std::int64_t last_released_batch = -1;
    };
    std::vector<Release> advance(FlowState& fs, SimTime now, AppStats& stats);
    std::map<FiveTuple, FlowState> flows_;
};

}  // namespace nicpool
