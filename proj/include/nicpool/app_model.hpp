#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nicpool/errors.hpp"
#include "nicpool/resource_kind.hpp"
#include "nicpool/sim_time.hpp"
#include "nicpool/util.hpp"

namespace nicpool {

// ============================================================
// Traffic abstractions
// ============================================================

enum class Proto : std::uint8_t { Tcp, Udp };

struct FiveTuple {
    std::uint32_t src_ip = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Proto proto = Proto::Tcp;

    auto operator<=>(const FiveTuple&) const = default;

    std::uint64_t hash() const {
        std::uint64_t h = fnv1a64(std::string_view("5t"));
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 0x100000001b3ULL;
        };
        mix(src_ip);
        mix(dst_ip);
        mix(src_port);
        mix(dst_port);
        mix(static_cast<std::uint64_t>(proto));
        return h;
    }

    std::string str() const;
};

constexpr std::uint32_t kMaxPayloadBytes = 1500;  // fixed per-packet buffer size

using MetaMap = std::map<std::string, std::int64_t>;

struct Packet {
    FiveTuple flow;
    std::uint32_t payload_len = 0;        // authoritative size; payload bytes may be synthetic
    std::vector<std::uint8_t> payload;    // empty unless the app inspects content
    MetaMap pkt_meta;
    std::int64_t flow_seq = 0;            // per-flow, assigned by the generator
    std::int64_t batch_seq = -1;          // assigned at partition time
    int subpipe_seq = 0;                  // next sub-pipeline hop
    SimTime ingress_time = 0;
    std::uint64_t uid = 0;                // engine-unique, for in-flight tracking
    bool socket_message = false;          // socket-level apps carry messages, not raw packets
};

struct FlowRecord {
    FiveTuple flow;
    MetaMap flow_meta;
};

enum class EpollKind : std::uint8_t { EpollIn, EpollOut };

struct SocketEvent {
    std::int64_t socket_id = 0;
    FiveTuple conn;
    EpollKind kind = EpollKind::EpollIn;
    std::vector<std::uint8_t> message;
    MetaMap ev_meta;
};

// ============================================================
// State access seen from UCFs
// ============================================================

// Bound to (nic, app) by the runtime; unit tests may use LocalStateCtx.
// Mutations and lookups report their modeled transport cost through
// consumed_cost() so the charging stage can extend its service time.
class StateCtx {
public:
    virtual ~StateCtx() = default;
    virtual void add(const std::string& name, std::span<const std::uint8_t> value) = 0;
    virtual void set(const std::string& name, std::span<const std::uint8_t> value) = 0;
    virtual void remove(const std::string& name) = 0;
    virtual std::optional<std::vector<std::uint8_t>> get(const std::string& name) = 0;
    virtual SimTime take_cost() = 0;  // cost accrued since last call

    // int64 convenience encoding used by the bundled applications
    void set_i64(const std::string& name, std::int64_t v);
    void add_i64(const std::string& name, std::int64_t v);
    std::optional<std::int64_t> get_i64(const std::string& name);
};

// No-op state context for stateless stages and isolated tests.
class NullStateCtx final : public StateCtx {
public:
    void add(const std::string&, std::span<const std::uint8_t>) override {}
    void set(const std::string&, std::span<const std::uint8_t>) override {}
    void remove(const std::string&) override {}
    std::optional<std::vector<std::uint8_t>> get(const std::string&) override { return std::nullopt; }
    SimTime take_cost() override { return 0; }
};

std::vector<std::uint8_t> encode_i64(std::int64_t v);
std::int64_t decode_i64(std::span<const std::uint8_t> raw);

// ============================================================
// Stage and application specs
// ============================================================

enum class StageKind : std::uint8_t { PktTrans, PktFlt, FlowExt, FlowTrans, SocketEpoll, AccelFn };

const char* stage_kind_name(StageKind k);
std::optional<StageKind> stage_kind_from_name(std::string_view s);

struct ServiceModel {
    double fixed_us = 0.0;
    double per_byte_us = 0.0;

    SimTime service_time(std::uint32_t payload_len) const {
        return us_to_time(fixed_us + per_byte_us * static_cast<double>(payload_len));
    }
};

struct AccelParams {
    std::vector<std::string> rules;  // regex: literal rule strings
    int block_size = 16;             // aes / sha block size
    int level = 6;                   // compression level
    std::uint64_t key = 0x6b657931;  // aes key material
};

struct StageSpec {
    std::string name;
    StageKind kind = StageKind::PktTrans;
    std::string ucf;  // registry name; may be empty for pure AccelFn
    ResourceClass resource_class = ResourceClass::cpu();
    ServiceModel service_model;
    // FlowExt
    int window_size = 0;
    int slide_interval = 0;
    // AccelFn
    AcceleratorKind accel = AcceleratorKind::Regex;
    AccelParams accel_params;
};

enum class Abstraction : std::uint8_t { PacketLevel, SocketLevel };
enum class AccessPattern : std::uint8_t { NonExternalWrite, FullAccess };

struct AppSpec {
    std::string app_id;
    std::vector<StageSpec> stages;
    Abstraction abstraction = Abstraction::PacketLevel;
    bool stateful = false;
    AccessPattern access_pattern = AccessPattern::NonExternalWrite;

    std::set<AcceleratorKind> accelerator_kinds() const;
    bool has_socket_stage() const;
};

// ============================================================
// UCF registry
// ============================================================

enum class StageAction : std::uint8_t { Pass, Drop };

using PacketUcf = std::function<StageAction(Packet&, StateCtx&)>;
using FlowUcf = std::function<void(FlowRecord&, StateCtx&)>;
// flow_ext: fills the emitted record from the completed window
using WindowUcf = std::function<void(std::span<const Packet>, FlowRecord&, StateCtx&)>;
using SocketUcf = std::function<StageAction(SocketEvent&, StateCtx&)>;

class UcfRegistry {
public:
    enum class UcfType { Packet, Flow, Window, Socket };

    void register_packet(const std::string& name, PacketUcf fn);
    void register_flow(const std::string& name, FlowUcf fn);
    void register_window(const std::string& name, WindowUcf fn);
    void register_socket(const std::string& name, SocketUcf fn);

    bool contains(const std::string& name) const { return entries_.count(name) > 0; }
    std::optional<UcfType> type_of(const std::string& name) const;

    const PacketUcf& packet_ucf(const std::string& name) const;
    const FlowUcf& flow_ucf(const std::string& name) const;
    const WindowUcf& window_ucf(const std::string& name) const;
    const SocketUcf& socket_ucf(const std::string& name) const;

private:
    struct Entry {
        UcfType type;
        PacketUcf pkt;
        FlowUcf flow;
        WindowUcf window;
        SocketUcf sock;
    };
    void insert(const std::string& name, Entry e);
    std::map<std::string, Entry> entries_;
};

// ============================================================
// Operations
// ============================================================

// Validates the chain and freezes it into an immutable AppSpec.
AppSpec build_app(std::vector<StageSpec> stages, Abstraction abstraction, bool stateful,
                  AccessPattern access_pattern, const UcfRegistry& registry,
                  const std::set<AcceleratorKind>& accel_vocabulary, const std::string& app_id = "");

struct StageResult {
    enum class Kind : std::uint8_t { Pass, Drop, Emit } kind = Kind::Pass;
    bool ucf_panic = false;         // UCF raised; packet dropped, pipeline continues
    std::optional<FlowRecord> emitted;
};

using StageInput = std::variant<Packet*, std::span<const Packet>, FlowRecord*, SocketEvent*>;

// Reference execution semantics for a single stage over one input.
// AccelFn applies the software reference transform, then the optional UCF.
StageResult execute_stage(const StageSpec& stage, StageInput input, StateCtx& state_ctx,
                          const UcfRegistry& registry);

struct MatchInfo {
    std::int64_t match_count = 0;
};

struct AccelOutput {
    std::vector<std::uint8_t> payload;
    MatchInfo match_info;
};

// Deterministic software reference behavior of each accelerator kind.
// Timing is never charged here; it comes from the stage's service model.
AccelOutput accel_reference(AcceleratorKind kind, const AccelParams& params,
                            std::span<const std::uint8_t> payload);

// Inverse transforms, provided for round-trip checks.
std::vector<std::uint8_t> accel_reference_inverse(AcceleratorKind kind, const AccelParams& params,
                                                  std::span<const std::uint8_t> payload);

// Naming convention for per-flow state entries; migration copies entries
// under this prefix when a flow moves across NICs.
std::string flow_state_prefix(const FiveTuple& flow);

// ============================================================
// Socket registration (per application instance)
// ============================================================

class SocketRegistry {
public:
    std::int64_t register_socket(const FiveTuple& conn);
    bool is_registered(const FiveTuple& conn) const { return by_conn_.count(conn) > 0; }
    const FiveTuple& conn_of(std::int64_t socket_id) const;

    // Runs `message` through the app's SocketEpoll stages in order.
    StageResult deliver_epoll(const AppSpec& app, std::int64_t socket_id, EpollKind kind,
                              std::vector<std::uint8_t> message, StateCtx& ctx,
                              const UcfRegistry& registry);

private:
    std::map<FiveTuple, std::int64_t> by_conn_;
    std::map<std::int64_t, FiveTuple> by_id_;
    std::int64_t next_id_ = 1;
};

}  // namespace nicpool
