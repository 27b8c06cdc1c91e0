#include "nicpool/config.hpp"

#include <filesystem>
#include <fstream>

namespace nicpool {

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
    throw_error(Errc::ParseError, where + ": " + what);
}

const Json& need(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) parse_fail(where, std::string("missing field '") + key + "'");
    return *it;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) parse_fail(path, "cannot open file");
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        parse_fail(path, e.what());
    }
    return j;
}

void check_schema(const Json& j, const std::string& where) {
    int v = get_or(j, "schema_version", 0);
    if (v != kConfigSchemaVersion)
        parse_fail(where, "unsupported schema_version " + std::to_string(v));
}

}  // namespace

ClusterConfig parse_cluster_config(const Json& j) {
    check_schema(j, "cluster");
    ClusterConfig cfg;
    cfg.default_rtt_us = get_or(j, "default_rtt_us", 4.52);
    if (!need(j, "nics", "cluster").is_array()) parse_fail("cluster", "'nics' must be an array");
    for (const auto& nj : j["nics"]) {
        NicConfig nc;
        nc.name = need(nj, "name", "nic").get<std::string>();
        nc.model = get_or<std::string>(nj, "model", "generic");
        nc.total_cores = need(nj, "cores", nc.name).get<int>();
        nc.reserved_to_cores = get_or(nj, "reserved_to_cores", 1);
        nc.memory_gb = get_or(nj, "memory_gb", 4 * nc.total_cores);
        nc.port_bw_gbps = get_or(nj, "port_bw_gbps", 100.0);
        nc.reserved_backup = get_or(nj, "reserved_backup", false);
        if (nj.contains("accelerators")) {
            for (const auto& aj : nj["accelerators"]) {
                AccelUnitConfig ac;
                std::string kind = need(aj, "kind", nc.name).get<std::string>();
                auto k = accelerator_from_name(kind);
                if (!k) throw_error(Errc::BadAcceleratorKind, kind + " on " + nc.name);
                ac.kind = *k;
                ac.count = get_or(aj, "count", 1);
                ac.capacity_gbps = get_or(aj, "capacity_gbps", 10.0);
                ac.fixed_us = get_or(aj, "fixed_us", 1.0);
                ac.per_byte_us = get_or(aj, "per_byte_us", 0.0);
                nc.accelerators.push_back(ac);
            }
        }
        cfg.nics.push_back(std::move(nc));
    }
    if (j.contains("rtt_overrides_us")) {
        for (const auto& rj : j["rtt_overrides_us"]) {
            if (!rj.is_array() || rj.size() != 3)
                parse_fail("cluster", "rtt override must be [nic, nic, us]");
            cfg.rtt_overrides_us.emplace_back(rj[0].get<std::string>(), rj[1].get<std::string>(),
                                              rj[2].get<double>());
        }
    }
    return cfg;
}

ClusterConfig load_cluster_file(const std::string& path) {
    return parse_cluster_config(load_json(path));
}

static TrafficSpec parse_traffic(const Json& j, const std::string& where) {
    TrafficSpec t;
    t.flows = get_or(j, "flows", 1);
    if (t.flows < 1) parse_fail(where, "flows must be >= 1");
    t.packet_bytes = get_or(j, "packet_bytes", 1500);
    if (t.packet_bytes < 1 || t.packet_bytes > static_cast<int>(kMaxPayloadBytes))
        parse_fail(where, "packet_bytes must be in [1, 1500]");
    std::string mode = get_or<std::string>(j, "mode", "saturate");
    if (mode == "saturate") {
        t.saturate = true;
    } else if (mode == "rate") {
        t.saturate = false;
        t.rate_gbps = need(j, "rate_gbps", where).get<double>();
        if (t.rate_gbps <= 0) parse_fail(where, "rate_gbps must be > 0");
    } else {
        parse_fail(where, "traffic mode must be 'saturate' or 'rate'");
    }
    std::string fill = get_or<std::string>(j, "fill", "none");
    if (fill == "none")
        t.fill = PayloadFill::None;
    else if (fill == "zeros")
        t.fill = PayloadFill::Zeros;
    else if (fill == "seeded")
        t.fill = PayloadFill::Seeded;
    else
        parse_fail(where, "fill must be none|zeros|seeded");
    t.seed = get_or<std::uint64_t>(j, "seed", 1);
    return t;
}

ScenarioConfig parse_scenario_config(const Json& j, const std::string& base_dir) {
    check_schema(j, "scenario");
    ScenarioConfig cfg;
    cfg.name = get_or<std::string>(j, "name", "scenario");
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.run_length = ms_to_time(need(j, "run_ms", cfg.name).get<double>());
    cfg.bin_width = ms_to_time(get_or(j, "report_bin_ms", 100.0));
    if (cfg.bin_width <= 0) parse_fail(cfg.name, "report_bin_ms must be > 0");

    const Json& cj = need(j, "cluster", cfg.name);
    if (cj.is_string()) {
        std::filesystem::path p = cj.get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        cfg.cluster = load_cluster_file(p.string());
    } else {
        cfg.cluster = parse_cluster_config(cj);
    }

    if (j.contains("engine")) {
        const Json& ej = j["engine"];
        cfg.engine.ring_capacity = get_or(ej, "ring_capacity", cfg.engine.ring_capacity);
        cfg.engine.high_watermark = get_or(ej, "high_watermark", cfg.engine.high_watermark);
        cfg.engine.batch_size = get_or(ej, "batch_size", cfg.engine.batch_size);
        cfg.engine.to_ingress_overhead_us =
            get_or(ej, "to_ingress_overhead_us", cfg.engine.to_ingress_overhead_us);
        cfg.engine.to_redirect_overhead_us =
            get_or(ej, "to_redirect_overhead_us", cfg.engine.to_redirect_overhead_us);
        cfg.engine.migration_buffer_pkts =
            get_or(ej, "migration_buffer_pkts", cfg.engine.migration_buffer_pkts);
        cfg.engine.saturate_overdrive =
            get_or(ej, "saturate_overdrive", cfg.engine.saturate_overdrive);
    }
    cfg.engine.bin_width = cfg.bin_width;
    cfg.engine.seed = cfg.seed;

    if (j.contains("controller")) {
        const Json& kj = j["controller"];
        cfg.controller.check_interval = ms_to_time(get_or(kj, "check_interval_ms", 100.0));
        cfg.controller.sync_interval = ms_to_time(get_or(kj, "sync_interval_ms", 100.0));
        cfg.controller.recovery_setup = ms_to_time(get_or(kj, "recovery_setup_ms", 50.0));
    }
    if (j.contains("profiling")) {
        const Json& pj = j["profiling"];
        cfg.profile_warmup = ms_to_time(get_or(pj, "warmup_ms", 10.0));
        cfg.profile_window = ms_to_time(get_or(pj, "window_ms", 100.0));
        cfg.profile_probe_packets = get_or(pj, "probe_packets", 64);
    }

    for (const auto& aj : need(j, "apps", cfg.name)) {
        ScenarioAppConfig ac;
        ac.id = need(aj, "id", "app").get<std::string>();
        if (aj.contains("builtin")) ac.builtin = aj["builtin"].get<std::string>();
        if (aj.contains("stages")) ac.inline_spec = aj;
        if (!ac.builtin && ac.inline_spec.is_null())
            parse_fail(ac.id, "app needs 'builtin' or 'stages'");
        if (aj.contains("service_us"))
            ac.service_us = aj["service_us"].get<std::vector<double>>();
        if (aj.contains("service_per_byte_us"))
            ac.service_per_byte_us = aj["service_per_byte_us"].get<std::vector<double>>();
        ac.target_gbps = need(aj, "target_gbps", ac.id).get<double>();
        if (aj.contains("latency_us") && !aj["latency_us"].is_null())
            ac.latency_us = aj["latency_us"].get<double>();
        ac.latency_sensitive = get_or(aj, "latency_sensitive", false);
        ac.failover = get_or(aj, "failover", false);
        std::string alloc_mode = get_or<std::string>(aj, "allocation", "fine");
        if (alloc_mode == "fine")
            ac.mode = PlacementMode::FineGrained;
        else if (alloc_mode == "whole_nic")
            ac.mode = PlacementMode::WholeNic;
        else
            parse_fail(ac.id, "allocation must be fine|whole_nic");
        ac.traffic = parse_traffic(need(aj, "traffic", ac.id), ac.id);
        ac.submit_at = ms_to_time(get_or(aj, "submit_ms", 0.0));
        cfg.apps.push_back(std::move(ac));
    }

    SimTime prev = 0;
    if (j.contains("timeline")) {
        for (const auto& tj : j["timeline"]) {
            TimelineEvent ev;
            ev.at = ms_to_time(need(tj, "at_ms", "timeline").get<double>());
            if (ev.at < prev) parse_fail(cfg.name, "timeline times must be nondecreasing");
            prev = ev.at;
            std::string kind = need(tj, "event", "timeline").get<std::string>();
            if (kind == "set_target") {
                ev.kind = TimelineEvent::Kind::SetTarget;
                ev.app = need(tj, "app", "timeline").get<std::string>();
                ev.gbps = need(tj, "gbps", "timeline").get<double>();
            } else if (kind == "fail_nic") {
                ev.kind = TimelineEvent::Kind::FailNic;
                ev.nic = need(tj, "nic", "timeline").get<std::string>();
            } else if (kind == "recover_nic") {
                ev.kind = TimelineEvent::Kind::RecoverNic;
                ev.nic = need(tj, "nic", "timeline").get<std::string>();
            } else if (kind == "stop_app") {
                ev.kind = TimelineEvent::Kind::StopApp;
                ev.app = need(tj, "app", "timeline").get<std::string>();
            } else {
                parse_fail(cfg.name, "unknown timeline event '" + kind + "'");
            }
            cfg.timeline.push_back(std::move(ev));
        }
    }
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::filesystem::path p(path);
    return parse_scenario_config(load_json(path), p.parent_path().string());
}

}  // namespace nicpool
