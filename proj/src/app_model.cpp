#include "nicpool/app_model.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

namespace nicpool {

std::string FiveTuple::str() const {
    std::ostringstream os;
    auto ip = [&os](std::uint32_t a) {
        os << ((a >> 24) & 0xff) << '.' << ((a >> 16) & 0xff) << '.' << ((a >> 8) & 0xff) << '.'
           << (a & 0xff);
    };
    ip(src_ip);
    os << ':' << src_port << "->";
    ip(dst_ip);
    os << ':' << dst_port << (proto == Proto::Tcp ? "/tcp" : "/udp");
    return os.str();
}

std::vector<std::uint8_t> encode_i64(std::int64_t v) {
    std::vector<std::uint8_t> out(8);
    auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(u >> (8 * i));
    return out;
}

std::int64_t decode_i64(std::span<const std::uint8_t> raw) {
    std::uint64_t u = 0;
    for (size_t i = 0; i < raw.size() && i < 8; ++i) u |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
    return static_cast<std::int64_t>(u);
}

void StateCtx::set_i64(const std::string& name, std::int64_t v) { set(name, encode_i64(v)); }

void StateCtx::add_i64(const std::string& name, std::int64_t v) {
    auto cur = get(name);
    if (cur) {
        set(name, encode_i64(decode_i64(*cur) + v));
    } else {
        add(name, encode_i64(v));
    }
}

std::optional<std::int64_t> StateCtx::get_i64(const std::string& name) {
    auto raw = get(name);
    if (!raw) return std::nullopt;
    return decode_i64(*raw);
}

const char* stage_kind_name(StageKind k) {
    switch (k) {
        case StageKind::PktTrans: return "pkt_trans";
        case StageKind::PktFlt: return "pkt_flt";
        case StageKind::FlowExt: return "flow_ext";
        case StageKind::FlowTrans: return "flow_trans";
        case StageKind::SocketEpoll: return "socket_epoll";
        case StageKind::AccelFn: return "accel_fn";
    }
    return "?";
}

std::optional<StageKind> stage_kind_from_name(std::string_view s) {
    for (auto k : {StageKind::PktTrans, StageKind::PktFlt, StageKind::FlowExt, StageKind::FlowTrans,
                   StageKind::SocketEpoll, StageKind::AccelFn})
        if (s == stage_kind_name(k)) return k;
    return std::nullopt;
}

std::set<AcceleratorKind> AppSpec::accelerator_kinds() const {
    std::set<AcceleratorKind> out;
    for (const auto& s : stages)
        if (!s.resource_class.is_cpu) out.insert(s.resource_class.accel);
    return out;
}

bool AppSpec::has_socket_stage() const {
    return std::any_of(stages.begin(), stages.end(),
                       [](const StageSpec& s) { return s.kind == StageKind::SocketEpoll; });
}

// ---------------- UCF registry ----------------

void UcfRegistry::insert(const std::string& name, Entry e) {
    if (entries_.count(name)) throw_error(Errc::DuplicateRegistration, "ucf '" + name + "'");
    entries_.emplace(name, std::move(e));
}

void UcfRegistry::register_packet(const std::string& name, PacketUcf fn) {
    insert(name, Entry{UcfType::Packet, std::move(fn), {}, {}, {}});
}
void UcfRegistry::register_flow(const std::string& name, FlowUcf fn) {
    insert(name, Entry{UcfType::Flow, {}, std::move(fn), {}, {}});
}
void UcfRegistry::register_window(const std::string& name, WindowUcf fn) {
    insert(name, Entry{UcfType::Window, {}, {}, std::move(fn), {}});
}
void UcfRegistry::register_socket(const std::string& name, SocketUcf fn) {
    insert(name, Entry{UcfType::Socket, {}, {}, {}, std::move(fn)});
}

std::optional<UcfRegistry::UcfType> UcfRegistry::type_of(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) return std::nullopt;
    return it->second.type;
}

const PacketUcf& UcfRegistry::packet_ucf(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.type != UcfType::Packet)
        throw_error(Errc::UnknownUcf, "packet ucf '" + name + "'");
    return it->second.pkt;
}
const FlowUcf& UcfRegistry::flow_ucf(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.type != UcfType::Flow)
        throw_error(Errc::UnknownUcf, "flow ucf '" + name + "'");
    return it->second.flow;
}
const WindowUcf& UcfRegistry::window_ucf(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.type != UcfType::Window)
        throw_error(Errc::UnknownUcf, "window ucf '" + name + "'");
    return it->second.window;
}
const SocketUcf& UcfRegistry::socket_ucf(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.type != UcfType::Socket)
        throw_error(Errc::UnknownUcf, "socket ucf '" + name + "'");
    return it->second.sock;
}

// ---------------- build_app ----------------

static UcfRegistry::UcfType required_ucf_type(StageKind k) {
    switch (k) {
        case StageKind::PktTrans:
        case StageKind::PktFlt:
        case StageKind::AccelFn: return UcfRegistry::UcfType::Packet;
        case StageKind::FlowExt: return UcfRegistry::UcfType::Window;
        case StageKind::FlowTrans: return UcfRegistry::UcfType::Flow;
        case StageKind::SocketEpoll: return UcfRegistry::UcfType::Socket;
    }
    return UcfRegistry::UcfType::Packet;
}

AppSpec build_app(std::vector<StageSpec> stages, Abstraction abstraction, bool stateful,
                  AccessPattern access_pattern, const UcfRegistry& registry,
                  const std::set<AcceleratorKind>& accel_vocabulary, const std::string& app_id) {
    if (stages.empty()) throw_error(Errc::EmptyPipeline, "application has no stages");

    bool any_socket = false;
    for (auto& st : stages) {
        // resource class is implied by the stage kind
        if (st.kind == StageKind::AccelFn) {
            st.resource_class = ResourceClass::accelerator(st.accel);
            if (!accel_vocabulary.count(st.accel))
                throw_error(Errc::UnknownAccelerator,
                            std::string(accelerator_name(st.accel)) + " in stage '" + st.name + "'");
        } else {
            st.resource_class = ResourceClass::cpu();
        }
        if (st.kind == StageKind::FlowExt && (st.window_size < 1 || st.slide_interval < 1))
            throw_error(Errc::BadParams, "flow_ext window/slide must be >= 1 in '" + st.name + "'");
        if (st.kind == StageKind::SocketEpoll) any_socket = true;

        bool ucf_optional = st.kind == StageKind::AccelFn;
        if (st.ucf.empty()) {
            if (!ucf_optional)
                throw_error(Errc::UnknownUcf, "stage '" + st.name + "' has no ucf");
        } else {
            auto t = registry.type_of(st.ucf);
            if (!t || *t != required_ucf_type(st.kind))
                throw_error(Errc::UnknownUcf,
                            "'" + st.ucf + "' not registered for " + stage_kind_name(st.kind));
        }
    }

    if (abstraction == Abstraction::PacketLevel && any_socket)
        throw_error(Errc::AbstractionMismatch, "socket stage in packet-level app");
    if (abstraction == Abstraction::SocketLevel && !any_socket)
        throw_error(Errc::AbstractionMismatch, "socket-level app without socket stage");

    static std::atomic<int> counter{0};
    AppSpec app;
    app.app_id = app_id.empty() ? "app-" + std::to_string(++counter) : app_id;
    app.stages = std::move(stages);
    app.abstraction = abstraction;
    app.stateful = stateful;
    app.access_pattern = access_pattern;
    return app;
}

// ---------------- execute_stage ----------------

static StageResult run_packet_stage(const StageSpec& stage, Packet& pkt, StateCtx& ctx,
                                    const UcfRegistry& reg) {
    StageResult res;
    if (stage.kind == StageKind::AccelFn) {
        if (!pkt.payload.empty()) {
            auto out = accel_reference(stage.accel, stage.accel_params, pkt.payload);
            pkt.payload = std::move(out.payload);
            if (pkt.payload.size() > kMaxPayloadBytes) {
                pkt.payload.resize(kMaxPayloadBytes);  // fixed buffer truncates
                pkt.pkt_meta["accel_truncated"] = 1;
            }
            pkt.payload_len = static_cast<std::uint32_t>(pkt.payload.size());
            pkt.pkt_meta["match_count"] = out.match_info.match_count;
        }
        if (stage.ucf.empty()) return res;
    }
    try {
        StageAction act = reg.packet_ucf(stage.ucf)(pkt, ctx);
        if (act == StageAction::Drop) {
            if (stage.kind == StageKind::PktTrans)
                res.kind = StageResult::Kind::Pass;  // pkt_trans cannot drop
            else
                res.kind = StageResult::Kind::Drop;
        }
    } catch (const Error&) {
        throw;  // registry/type errors propagate
    } catch (const std::exception&) {
        res.kind = StageResult::Kind::Drop;
        res.ucf_panic = true;
    }
    return res;
}

StageResult execute_stage(const StageSpec& stage, StageInput input, StateCtx& state_ctx,
                          const UcfRegistry& registry) {
    switch (stage.kind) {
        case StageKind::PktTrans:
        case StageKind::PktFlt:
        case StageKind::AccelFn: {
            auto* ppkt = std::get_if<Packet*>(&input);
            if (!ppkt || !*ppkt)
                throw_error(Errc::TypeMismatch, std::string(stage_kind_name(stage.kind)) + " needs a packet");
            return run_packet_stage(stage, **ppkt, state_ctx, registry);
        }
        case StageKind::FlowExt: {
            auto* win = std::get_if<std::span<const Packet>>(&input);
            if (!win || win->empty()) throw_error(Errc::TypeMismatch, "flow_ext needs a packet window");
            StageResult res;
            res.kind = StageResult::Kind::Emit;
            FlowRecord rec;
            rec.flow = win->front().flow;
            try {
                registry.window_ucf(stage.ucf)(*win, rec, state_ctx);
            } catch (const Error&) {
                throw;
            } catch (const std::exception&) {
                res.ucf_panic = true;
            }
            res.emitted = std::move(rec);
            return res;
        }
        case StageKind::FlowTrans: {
            auto* prec = std::get_if<FlowRecord*>(&input);
            if (!prec || !*prec) throw_error(Errc::TypeMismatch, "flow_trans needs a flow record");
            StageResult res;
            try {
                registry.flow_ucf(stage.ucf)(**prec, state_ctx);
            } catch (const Error&) {
                throw;
            } catch (const std::exception&) {
                res.kind = StageResult::Kind::Drop;
                res.ucf_panic = true;
            }
            return res;
        }
        case StageKind::SocketEpoll: {
            auto* pev = std::get_if<SocketEvent*>(&input);
            if (!pev || !*pev) throw_error(Errc::TypeMismatch, "socket_epoll needs a socket event");
            StageResult res;
            try {
                StageAction act = registry.socket_ucf(stage.ucf)(**pev, state_ctx);
                if (act == StageAction::Drop) res.kind = StageResult::Kind::Drop;
            } catch (const Error&) {
                throw;
            } catch (const std::exception&) {
                res.kind = StageResult::Kind::Drop;
                res.ucf_panic = true;
            }
            return res;
        }
    }
    throw_error(Errc::TypeMismatch, "unknown stage kind");
}

std::string flow_state_prefix(const FiveTuple& flow) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "f%016llx:", static_cast<unsigned long long>(flow.hash()));
    return buf;
}

// ---------------- socket registry ----------------

std::int64_t SocketRegistry::register_socket(const FiveTuple& conn) {
    if (by_conn_.count(conn)) throw_error(Errc::DuplicateRegistration, "socket for " + conn.str());
    std::int64_t id = next_id_++;
    by_conn_.emplace(conn, id);
    by_id_.emplace(id, conn);
    return id;
}

const FiveTuple& SocketRegistry::conn_of(std::int64_t socket_id) const {
    auto it = by_id_.find(socket_id);
    if (it == by_id_.end()) throw_error(Errc::UnknownSocket, "socket " + std::to_string(socket_id));
    return it->second;
}

StageResult SocketRegistry::deliver_epoll(const AppSpec& app, std::int64_t socket_id, EpollKind kind,
                                          std::vector<std::uint8_t> message, StateCtx& ctx,
                                          const UcfRegistry& registry) {
    const FiveTuple& conn = conn_of(socket_id);
    SocketEvent ev;
    ev.socket_id = socket_id;
    ev.conn = conn;
    ev.kind = kind;
    ev.message = std::move(message);

    StageResult last;
    for (const auto& st : app.stages) {
        if (st.kind != StageKind::SocketEpoll) continue;
        last = execute_stage(st, &ev, ctx, registry);
        if (last.kind == StageResult::Kind::Drop) return last;
    }
    return last;
}

}  // namespace nicpool
