#include "nicpool/report.hpp"

#include <fstream>

namespace nicpool {

namespace {

OrderedJson rv_json(const ResourceVector& rv) {
    OrderedJson j;
    j["cpu"] = rv.cpu_units;
    for (auto& [k, n] : rv.accel)
        if (n != 0) j[accelerator_name(k)] = n;
    return j;
}

OrderedJson placement_json(const Cluster& cluster, const Placement& p) {
    OrderedJson j;
    j["best_effort"] = p.best_effort;
    j["latency_sensitive"] = p.latency_sensitive;
    OrderedJson groups = OrderedJson::array();
    for (const auto& g : p.groups) {
        OrderedJson gj;
        gj["group_id"] = g.group_id;
        OrderedJson ranges = OrderedJson::array();
        for (const auto& r : g.ranges) {
            OrderedJson rj;
            rj["nic"] = cluster.nic(r.nic).name;
            rj["stages"] = {r.lo, r.hi};
            rj["lanes"] = r.lanes;
            ranges.push_back(rj);
        }
        gj["subpipelines"] = ranges;
        OrderedJson stages = OrderedJson::array();
        for (const auto& sa : g.stages) {
            OrderedJson sj;
            sj["stage"] = sa.stage;
            sj["nic"] = cluster.nic(sa.nic).name;
            sj["replicas"] = sa.count;
            stages.push_back(sj);
        }
        gj["stages"] = stages;
        groups.push_back(gj);
    }
    j["groups"] = groups;
    return j;
}

}  // namespace

OrderedJson build_report(const ScenarioConfig& cfg, const Cluster& cluster, const Engine& engine,
                         const Controller& controller) {
    OrderedJson j;
    j["schema_version"] = kReportSchemaVersion;
    j["scenario"] = cfg.name;
    j["seed"] = cfg.seed;
    j["run_ms"] = time_to_ms(cfg.run_length);
    j["bin_ms"] = time_to_ms(cfg.bin_width);

    std::int64_t n_bins = cfg.run_length / cfg.bin_width + (cfg.run_length % cfg.bin_width ? 1 : 0);

    OrderedJson apps;
    for (const auto& [app_id, dep] : controller.deployments()) {
        OrderedJson aj;
        aj["status"] = deploy_status_name(dep.status);
        if (!dep.status_reason.empty()) aj["status_reason"] = dep.status_reason;
        aj["target_gbps"] = dep.target.throughput_gbps;

        OrderedJson pj;
        pj["lambda_gbps"] = dep.profile.lambda_gbps;
        pj["stage_latency_us"] = dep.profile.stage_latency_us;
        pj["pipeline_latency_us"] = dep.profile.pipeline_latency_us;
        aj["profile"] = pj;

        OrderedJson plj;
        plj["replicas"] = dep.plan.replicas;
        OrderedJson segs = OrderedJson::array();
        for (const auto& s : dep.plan.segments) segs.push_back(OrderedJson{s.lo, s.hi});
        plj["segments"] = segs;
        plj["pipeline_count"] = dep.plan.pipeline_count();
        aj["replication_plan"] = plj;

        OrderedJson alj;
        alj["full_copies"] = dep.alloc.full_copies;
        alj["remainder_units"] = dep.alloc.remainder_units;
        alj["per_stage_total"] = dep.alloc.per_stage_total;
        alj["total_rv"] = rv_json(dep.alloc.total_rv);
        alj["measured_t_gbps"] = dep.measured_t_gbps;
        aj["allocation"] = alj;

        aj["placement"] = placement_json(cluster, dep.placement);

        static const AppStats kNoStats;
        bool live = true;
        try {
            engine.app_stats(app_id);
        } catch (const Error&) {
            live = false;
        }
        const AppStats& st = live ? engine.app_stats(app_id) : kNoStats;
        std::vector<double> series(static_cast<size_t>(n_bins), 0.0);
        for (auto& [bin, bits] : st.bin_bits)
            if (bin >= 0 && bin < n_bins)
                series[static_cast<size_t>(bin)] = gbps(bits, cfg.bin_width);
        aj["throughput_gbps_bins"] = series;

        LatencySummary lat = summarize_latency(st.latency_samples, st.latency_count, st.latency_sum);
        OrderedJson lj;
        lj["avg"] = lat.avg_us;
        lj["p50"] = lat.p50_us;
        lj["p90"] = lat.p90_us;
        lj["p99"] = lat.p99_us;
        aj["latency_us"] = lj;

        OrderedJson cj;
        cj["generated"] = st.generated;
        cj["accepted"] = st.accepted;
        cj["released"] = st.released;
        cj["duplicates"] = st.duplicates;
        cj["emitted_flow_records"] = st.emitted_flow_records;
        cj["ucf_panics"] = st.ucf_panics;
        cj["order_violations"] = st.order_violations;
        OrderedJson dj;
        for (auto& [reason, n] : st.drops) dj[reason] = n;
        cj["drops"] = dj;
        aj["counters"] = cj;

        OrderedJson rp;
        if (live)
            for (auto& [k, v] : engine.ring_peaks(app_id)) rp[k] = v;
        aj["ring_peaks"] = rp;

        apps[app_id] = aj;
    }
    j["apps"] = apps;

    OrderedJson nics;
    SimTime elapsed = cfg.run_length > 0 ? cfg.run_length : 1;
    for (const auto& nd : cluster.nics()) {
        OrderedJson nj;
        nj["model"] = nd.model;
        nj["cores_total"] = nd.total_cores;
        nj["allocated_units"] = nd.allocated_units;
        nj["failed"] = nd.failed;
        const NicStats& ns = engine.nic_stats(nd.nic_id);
        nj["core_utilization"] =
            nd.total_cores > 0
                ? static_cast<double>(ns.cpu_busy_ns) / (static_cast<double>(elapsed) * nd.total_cores)
                : 0.0;
        OrderedJson au;
        for (auto k : kAllAcceleratorKinds) {
            int count = nd.accel_count(k);
            if (count == 0) continue;
            auto it = ns.accel_busy_ns.find(k);
            std::int64_t busy = it == ns.accel_busy_ns.end() ? 0 : it->second;
            au[accelerator_name(k)] =
                static_cast<double>(busy) / (static_cast<double>(elapsed) * count);
        }
        nj["accel_utilization"] = au;
        nj["redirections"] = ns.redirections;
        nj["migrations"] = ns.migrations;
        nics[nd.name] = nj;
    }
    j["nics"] = nics;

    OrderedJson events = OrderedJson::array();
    for (const auto& ev : controller.events()) {
        OrderedJson ej;
        ej["at_ms"] = time_to_ms(ev.at);
        ej["kind"] = ev.kind;
        ej["detail"] = ev.detail;
        events.push_back(ej);
    }
    j["events"] = events;

    OrderedJson recoveries = OrderedJson::array();
    for (const auto& rec : controller.recoveries()) {
        OrderedJson rj;
        rj["failed_nic"] = cluster.nic(rec.failed_nic).name;
        rj["detected_at_ms"] = time_to_ms(rec.detected_at);
        OrderedJson per = OrderedJson::array();
        for (const auto& pa : rec.apps) {
            OrderedJson pj;
            pj["app"] = pa.app_id;
            pj["replayed"] = pa.replayed;
            pj["recovered"] = pa.recovered;
            if (!pa.reason.empty()) pj["reason"] = pa.reason;
            per.push_back(pj);
        }
        rj["apps"] = per;
        recoveries.push_back(rj);
    }
    j["recoveries"] = recoveries;
    return j;
}

OrderedJson dump_flow_tables(Engine& engine, const Cluster& cluster,
                             const std::vector<std::string>& app_ids) {
    OrderedJson out;
    for (const auto& nd : cluster.nics()) {
        TrafficOrchestrator& to = engine.to(nd.nic_id);
        OrderedJson nic_j;
        nic_j["redirections"] = to.redirections;
        nic_j["drops"] = to.drops;
        nic_j["migrations_started"] = to.migrations_started;
        OrderedJson apps_j;
        for (const auto& app : app_ids) {
            OrderedJson entries = OrderedJson::array();
            for (auto& [flow, e] : to.table(app)) {
                OrderedJson ej;
                ej["flow"] = flow.str();
                OrderedJson pins = OrderedJson::array();
                for (const auto& ref : e.pinned) pins.push_back(ref.str());
                ej["pinned"] = pins;
                std::int64_t routed = 0;
                for (auto& [lane, n] : e.load_share) routed += n;
                ej["packets_routed"] = routed;
                ej["last_seen_us"] = time_to_us(e.last_seen);
                ej["migrating"] = e.migrating;
                entries.push_back(ej);
            }
            if (!entries.empty()) apps_j[app] = entries;
        }
        nic_j["apps"] = apps_j;
        out[nd.name] = nic_j;
    }
    return out;
}

OrderedJson dump_state_tables(const StateFabric& fabric, const Cluster& cluster) {
    OrderedJson out;
    for (const auto& [nic, app] : fabric.table_keys()) {
        const StateTable* t = fabric.table_if(nic, app);
        if (!t) continue;
        OrderedJson entries = OrderedJson::array();
        for (const StateEntry* e : t->entry_records()) {
            OrderedJson ej;
            ej["name"] = e->name();
            ej["len"] = e->s_len;
            ej["lu_time_us"] = time_to_us(e->lu_time);
            entries.push_back(ej);
        }
        out[cluster.nic(nic).name][app] = entries;
    }
    return out;
}

void write_report(const OrderedJson& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_error(Errc::ValidationError, "cannot write report to " + path);
    out << report.dump(2) << "\n";
}

}  // namespace nicpool
