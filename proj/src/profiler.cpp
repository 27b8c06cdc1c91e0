#include "nicpool/profiler.hpp"

#include <numeric>

namespace nicpool {

namespace {

AllocationPlan minimal_allocation(size_t n_stages) {
    AllocationPlan alloc;
    alloc.full_copies = 0;
    alloc.remainder_units = 1;
    alloc.per_stage_total.assign(n_stages, 1);
    return alloc;
}

AllocationPlan one_copy_allocation(const ReplicationPlan& plan) {
    AllocationPlan alloc;
    alloc.full_copies = 1;
    alloc.remainder_units = 0;
    alloc.per_stage_total = plan.replicas;
    return alloc;
}

struct MeasureRun {
    Cluster cluster;
    StateFabric fabric;
    Engine engine;
    std::string app_id;

    MeasureRun(const AppSpec& app, const Cluster& snapshot, const UcfRegistry* registry,
               const AllocationPlan& alloc, const ProfileOptions& opts, bool profiling)
        : cluster(snapshot), fabric(&cluster), engine(&cluster, &fabric, registry, opts.engine),
          app_id(app.app_id) {
        PerfTarget target;
        target.throughput_gbps = 1.0;
        Placement placement;
        try {
            placement = place(app, alloc, cluster, target);
        } catch (const Error& e) {
            if (profiling && e.code() == Errc::NothingPlaceable)
                throw_error(Errc::InsufficientForProfiling, app.app_id);
            throw;
        }
        if (app.stateful) {
            std::vector<NicId> replicas;
            for (const auto& g : placement.groups)
                for (const auto& r : g.ranges) replicas.push_back(r.nic);
            fabric.register_app(app.app_id, app.access_pattern, replicas);
            register_builtin_reducers(fabric);
        }
        engine.instantiate(app, placement);
    }
};

}  // namespace

Profile profile_app(const AppSpec& app, const Cluster& snapshot, const UcfRegistry* registry,
                    const ProfileOptions& opts) {
    Profile out;
    out.app_id = app.app_id;

    // saturated single-pipeline run for lambda and per-stage service times
    {
        MeasureRun run(app, snapshot, registry, minimal_allocation(app.stages.size()), opts, true);
        TrafficSpec traffic;
        traffic.flows = std::max(4, static_cast<int>(app.stages.size()));
        traffic.packet_bytes = opts.packet_bytes;
        traffic.saturate = true;
        traffic.seed = opts.engine.seed;
        run.engine.attach_traffic(app.app_id, traffic);
        run.engine.start_traffic(app.app_id, 0);

        run.engine.run_until(opts.warmup);
        std::int64_t bits0 = run.engine.app_stats(app.app_id).released_bits;
        run.engine.run_until(opts.warmup + opts.window);
        std::int64_t bits1 = run.engine.app_stats(app.app_id).released_bits;
        out.lambda_gbps = gbps(bits1 - bits0, opts.window);

        auto pools = run.engine.pool_summary(app.app_id);
        out.stage_latency_us.assign(app.stages.size(), 0.0);
        for (const auto& p : pools)
            if (p.served > 0)
                out.stage_latency_us[static_cast<size_t>(p.stage)] =
                    time_to_us(p.service_ns) / static_cast<double>(p.served);
    }

    // unloaded latency: widely spaced single-packet probes, fresh instance
    {
        ProfileOptions probe_opts = opts;
        probe_opts.engine.batch_size = 1;
        MeasureRun run(app, snapshot, registry, minimal_allocation(app.stages.size()), probe_opts,
                       true);
        double sum_l = std::accumulate(out.stage_latency_us.begin(), out.stage_latency_us.end(), 0.0);
        SimTime spacing = std::max<SimTime>(us_to_time(10.0 * std::max(sum_l, 1.0)), 10 * kUsec);
        TrafficSpec traffic;
        traffic.flows = 1;
        traffic.packet_bytes = opts.packet_bytes;
        traffic.saturate = false;
        traffic.rate_gbps = static_cast<double>(8 * opts.packet_bytes) / static_cast<double>(spacing);
        traffic.seed = opts.engine.seed;
        run.engine.attach_traffic(app.app_id, traffic);
        run.engine.start_traffic(app.app_id, 0);
        run.engine.run_until(spacing * (opts.probe_packets + 4));
        run.engine.stop_traffic(app.app_id);
        run.engine.run_until(run.engine.now() + spacing * 4);
        const AppStats& st = run.engine.app_stats(app.app_id);
        if (st.latency_count > 0)
            out.pipeline_latency_us =
                time_to_us(st.latency_sum) / static_cast<double>(st.latency_count);
    }
    return out;
}

double measure_replicated_gbps(const AppSpec& app, const ReplicationPlan& plan,
                               const Cluster& snapshot, const UcfRegistry* registry,
                               const ProfileOptions& opts) {
    MeasureRun run(app, snapshot, registry, one_copy_allocation(plan), opts, false);
    TrafficSpec traffic;
    traffic.flows = std::max<int>(4 * static_cast<int>(plan.pipeline_count()),
                                  static_cast<int>(app.stages.size()));
    traffic.packet_bytes = opts.packet_bytes;
    traffic.saturate = true;
    traffic.seed = opts.engine.seed;
    run.engine.attach_traffic(app.app_id, traffic);
    run.engine.start_traffic(app.app_id, 0);

    run.engine.run_until(opts.warmup);
    std::int64_t bits0 = run.engine.app_stats(app.app_id).released_bits;
    run.engine.run_until(opts.warmup + opts.window);
    std::int64_t bits1 = run.engine.app_stats(app.app_id).released_bits;
    return gbps(bits1 - bits0, opts.window);
}

}  // namespace nicpool
