#include "nicpool/examples_lib.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace nicpool {

std::vector<std::string> builtin_app_names() {
    return {"intrusion_detection", "ipcomp_gateway", "ipsec_gateway",
            "firewall",            "flow_monitor",   "l7_load_balancer"};
}

namespace {

// Byte-distribution spread as a stand-in for the entropy test: drops when a
// large payload is dominated by a single byte value.
StageAction ddos_check(Packet& pkt, StateCtx&) {
    if (pkt.payload.empty()) return StageAction::Pass;
    std::array<int, 256> hist{};
    for (std::uint8_t b : pkt.payload) hist[b]++;
    int peak = *std::max_element(hist.begin(), hist.end());
    if (pkt.payload.size() >= 64 && peak * 2 > static_cast<int>(pkt.payload.size()))
        return StageAction::Drop;
    return StageAction::Pass;
}

StageAction url_check(Packet& pkt, StateCtx&) {
    auto it = pkt.pkt_meta.find("match_count");
    return (it != pkt.pkt_meta.end() && it->second > 0) ? StageAction::Drop : StageAction::Pass;
}

StageAction ipsec_encap(Packet& pkt, StateCtx&) {
    pkt.pkt_meta["esp"] = 1;
    return StageAction::Pass;
}

StageAction alert_filter(Packet& pkt, StateCtx&) {
    auto it = pkt.pkt_meta.find("match_count");
    return (it != pkt.pkt_meta.end() && it->second >= 4) ? StageAction::Drop : StageAction::Pass;
}

StageAction normalize(Packet& pkt, StateCtx&) {
    pkt.pkt_meta["normalized"] = 1;
    return StageAction::Pass;
}

StageAction ipcomp_classify(Packet& pkt, StateCtx&) {
    pkt.pkt_meta["comp_candidate"] = pkt.payload_len >= 128 ? 1 : 0;
    return StageAction::Pass;
}

StageAction acl_check(Packet& pkt, StateCtx&) {
    // default-deny a small blocked port set
    switch (pkt.flow.dst_port) {
        case 23:
        case 135:
        case 445: return StageAction::Drop;
        default: return StageAction::Pass;
    }
}

void conn_track(FlowRecord& rec, StateCtx& ctx) {
    ctx.add_i64(flow_state_prefix(rec.flow) + "pkts", 1);
    rec.flow_meta["tracked"] = 1;
}

void id_track(FlowRecord& rec, StateCtx& ctx) {
    ctx.add_i64(flow_state_prefix(rec.flow) + "seen", 1);
    rec.flow_meta["seen"] = rec.flow_meta["seen"] + 1;
}

void fm_window(std::span<const Packet> window, FlowRecord& rec, StateCtx&) {
    std::int64_t bytes = 0;
    for (const auto& p : window) bytes += p.payload_len;
    rec.flow_meta["win_pkts"] = static_cast<std::int64_t>(window.size());
    rec.flow_meta["win_bytes"] = bytes;
}

void fm_count(FlowRecord& rec, StateCtx& ctx) {
    ctx.add_i64(flow_state_prefix(rec.flow) + "pkts", 1);
    rec.flow_meta["pkts"] = rec.flow_meta["pkts"] + 1;
}

// API-gateway socket handler: authenticate the message tag, rate-limit,
// redirect to a backend. Empty messages are keepalives and pass through.
StageAction l7_gateway(SocketEvent& ev, StateCtx& ctx) {
    if (ev.kind != EpollKind::EpollIn) return StageAction::Drop;
    if (ev.message.empty()) return StageAction::Pass;
    if (ev.message.size() < 8) return StageAction::Drop;
    std::span<const std::uint8_t> body(ev.message.data(), ev.message.size() - 8);
    AccelParams params;
    auto tagged = accel_reference(AcceleratorKind::Sha, params, body);
    bool authentic = std::equal(tagged.payload.end() - 8, tagged.payload.end(),
                                ev.message.end() - 8);
    if (!authentic) return StageAction::Drop;
    ctx.add_i64(flow_state_prefix(ev.conn) + "msgs", 1);
    ev.ev_meta["backend"] = static_cast<std::int64_t>(ev.conn.hash() % 4);
    return StageAction::Pass;
}

struct StageTemplate {
    const char* name;
    StageKind kind;
    const char* ucf;
    AcceleratorKind accel;
    int window = 0, slide = 0;
};

struct AppTemplate {
    const char* name;
    Abstraction abstraction;
    bool stateful;
    AccessPattern pattern;
    std::vector<StageTemplate> stages;
};

const std::vector<AppTemplate>& app_templates() {
    static const std::vector<AppTemplate> t = {
        {"intrusion_detection",
         Abstraction::PacketLevel,
         true,
         AccessPattern::FullAccess,
         {{"normalize", StageKind::PktTrans, "normalize", AcceleratorKind::Regex},
          {"rule_match", StageKind::AccelFn, "alert_filter", AcceleratorKind::Regex},
          {"track", StageKind::FlowTrans, "id_track", AcceleratorKind::Regex}}},
        {"ipcomp_gateway",
         Abstraction::PacketLevel,
         false,
         AccessPattern::NonExternalWrite,
         {{"classify", StageKind::PktTrans, "ipcomp_classify", AcceleratorKind::Regex},
          {"compress", StageKind::AccelFn, "", AcceleratorKind::Compression}}},
        {"ipsec_gateway",
         Abstraction::PacketLevel,
         false,
         AccessPattern::NonExternalWrite,
         {{"ddos_check", StageKind::PktFlt, "ddos_check", AcceleratorKind::Regex},
          {"url_check", StageKind::AccelFn, "url_check", AcceleratorKind::Regex},
          {"ipsec", StageKind::PktTrans, "ipsec_encap", AcceleratorKind::Regex},
          {"encrypt", StageKind::AccelFn, "", AcceleratorKind::Aes}}},
        {"firewall",
         Abstraction::PacketLevel,
         true,
         AccessPattern::FullAccess,
         {{"acl", StageKind::PktFlt, "acl_check", AcceleratorKind::Regex},
          {"conn_track", StageKind::FlowTrans, "conn_track", AcceleratorKind::Regex}}},
        {"flow_monitor",
         Abstraction::PacketLevel,
         true,
         AccessPattern::NonExternalWrite,
         {{"flow_ext", StageKind::FlowExt, "fm_window", AcceleratorKind::Regex, 16, 16},
          {"count", StageKind::FlowTrans, "fm_count", AcceleratorKind::Regex}}},
        {"l7_load_balancer",
         Abstraction::SocketLevel,
         true,
         AccessPattern::FullAccess,
         {{"gateway", StageKind::SocketEpoll, "l7_gateway", AcceleratorKind::Regex}}},
    };
    return t;
}

const AppTemplate& find_template(const std::string& name) {
    for (const auto& t : app_templates())
        if (name == t.name) return t;
    throw_error(Errc::ValidationError, "unknown builtin app '" + name + "'");
}

}  // namespace

void register_builtin_ucfs(UcfRegistry& registry) {
    registry.register_packet("ddos_check", ddos_check);
    registry.register_packet("url_check", url_check);
    registry.register_packet("ipsec_encap", ipsec_encap);
    registry.register_packet("alert_filter", alert_filter);
    registry.register_packet("normalize", normalize);
    registry.register_packet("ipcomp_classify", ipcomp_classify);
    registry.register_packet("acl_check", acl_check);
    registry.register_packet("identity", [](Packet&, StateCtx&) { return StageAction::Pass; });
    registry.register_flow("conn_track", conn_track);
    registry.register_flow("id_track", id_track);
    registry.register_flow("fm_count", fm_count);
    registry.register_window("fm_window", fm_window);
    registry.register_socket("l7_gateway", l7_gateway);
}

size_t builtin_stage_count(const std::string& name) { return find_template(name).stages.size(); }

AppSpec make_builtin_app(const std::string& name, const std::string& app_id,
                         const std::vector<double>& service_us,
                         const std::vector<double>& per_byte_us, const UcfRegistry& registry,
                         const std::set<AcceleratorKind>& vocabulary) {
    const AppTemplate& t = find_template(name);
    if (service_us.size() != t.stages.size())
        throw_error(Errc::ValidationError, name + " needs " + std::to_string(t.stages.size()) +
                                               " service_us entries");
    std::vector<StageSpec> stages;
    for (size_t i = 0; i < t.stages.size(); ++i) {
        const auto& st = t.stages[i];
        StageSpec s;
        s.name = st.name;
        s.kind = st.kind;
        s.ucf = st.ucf;
        s.accel = st.accel;
        s.window_size = st.window;
        s.slide_interval = st.slide;
        s.service_model.fixed_us = service_us[i];
        if (i < per_byte_us.size()) s.service_model.per_byte_us = per_byte_us[i];
        if (s.kind == StageKind::AccelFn && name == "ipsec_gateway" && s.ucf == "url_check")
            s.accel_params.rules = {"/attack", "/exploit"};
        if (s.kind == StageKind::AccelFn && name == "intrusion_detection")
            s.accel_params.rules = {"cmd.exe", "/etc/passwd", "<script>"};
        stages.push_back(std::move(s));
    }
    return build_app(std::move(stages), t.abstraction, t.stateful, t.pattern, registry, vocabulary,
                     app_id);
}

AppSpec build_scenario_app(const ScenarioAppConfig& cfg, const UcfRegistry& registry,
                           const std::set<AcceleratorKind>& vocabulary) {
    if (cfg.builtin)
        return make_builtin_app(*cfg.builtin, cfg.id, cfg.service_us, cfg.service_per_byte_us,
                                registry, vocabulary);

    const Json& j = cfg.inline_spec;
    std::vector<StageSpec> stages;
    size_t idx = 0;
    for (const auto& sj : j.at("stages")) {
        StageSpec s;
        s.name = sj.value("name", "stage" + std::to_string(idx));
        auto kind = stage_kind_from_name(sj.at("kind").get<std::string>());
        if (!kind) throw_error(Errc::ParseError, cfg.id + ": unknown stage kind");
        s.kind = *kind;
        s.ucf = sj.value("ucf", "");
        if (s.kind == StageKind::AccelFn) {
            auto a = accelerator_from_name(sj.at("accel").get<std::string>());
            if (!a) throw_error(Errc::BadAcceleratorKind, cfg.id);
            s.accel = *a;
            if (sj.contains("rules")) s.accel_params.rules = sj["rules"].get<std::vector<std::string>>();
            s.accel_params.block_size = sj.value("block_size", 16);
            s.accel_params.level = sj.value("level", 6);
        }
        s.window_size = sj.value("window_size", 0);
        s.slide_interval = sj.value("slide_interval", 0);
        if (idx < cfg.service_us.size()) s.service_model.fixed_us = cfg.service_us[idx];
        else s.service_model.fixed_us = sj.value("fixed_us", 1.0);
        if (idx < cfg.service_per_byte_us.size())
            s.service_model.per_byte_us = cfg.service_per_byte_us[idx];
        else
            s.service_model.per_byte_us = sj.value("per_byte_us", 0.0);
        stages.push_back(std::move(s));
        ++idx;
    }
    std::string abstraction = j.value("abstraction", "packet");
    bool stateful = j.value("stateful", false);
    std::string pattern = j.value("access_pattern", "non_external_write");
    return build_app(std::move(stages),
                     abstraction == "socket" ? Abstraction::SocketLevel : Abstraction::PacketLevel,
                     stateful,
                     pattern == "full_access" ? AccessPattern::FullAccess
                                              : AccessPattern::NonExternalWrite,
                     registry, vocabulary, cfg.id);
}

}  // namespace nicpool
