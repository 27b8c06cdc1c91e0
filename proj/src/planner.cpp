#include "nicpool/planner.hpp"

#include "nicpool/util.hpp"

namespace nicpool {

ReplicationPlan plan_replication(std::span<const double> latencies_us) {
    if (latencies_us.empty()) throw_error(Errc::EmptyInput, "no stage latencies");
    for (double l : latencies_us)
        if (!(l > 0.0)) throw_error(Errc::NonPositiveLatency, "stage latency must be > 0");

    const size_t n = latencies_us.size();
    ReplicationPlan plan;
    plan.replicas.assign(n, 1);

    size_t lo = 0;
    while (lo < n) {
        size_t d = lo;
        for (size_t i = lo + 1; i < n; ++i)
            if (latencies_us[i] < latencies_us[d]) d = i;  // earliest index wins ties
        for (size_t i = lo; i < d; ++i)
            plan.replicas[i] = iceil_ratio(latencies_us[i], latencies_us[d]);
        plan.replicas[d] = 1;
        plan.segments.push_back(Segment{static_cast<int>(lo), static_cast<int>(d)});
        lo = d + 1;
    }
    return plan;
}

AllocationPlan compute_allocation(const ReplicationPlan& plan, double target_gbps,
                                  double measured_gbps, double lambda_gbps,
                                  std::span<const ResourceClass> classes) {
    if (!(target_gbps > 0.0)) throw_error(Errc::NonPositiveTarget, "target throughput");
    if (!(measured_gbps > 0.0)) throw_error(Errc::NonPositiveTarget, "measured throughput t");
    if (!(lambda_gbps > 0.0)) throw_error(Errc::NonPositiveTarget, "baseline lambda");

    AllocationPlan alloc;
    alloc.full_copies = ifloor_ratio(target_gbps, measured_gbps);
    double residual = target_gbps - static_cast<double>(alloc.full_copies) * measured_gbps;
    alloc.remainder_units = residual > 1e-9 ? iceil_ratio(residual, lambda_gbps) : 0;
    if (alloc.remainder_units < 0) alloc.remainder_units = 0;

    alloc.per_stage_total.reserve(plan.replicas.size());
    for (size_t i = 0; i < plan.replicas.size(); ++i) {
        long total = plan.replicas[i] * alloc.full_copies + alloc.remainder_units;
        alloc.per_stage_total.push_back(total);
        ResourceClass rc = i < classes.size() ? classes[i] : ResourceClass::cpu();
        if (rc.is_cpu)
            alloc.total_rv.cpu_units += static_cast<int>(total);
        else
            alloc.total_rv.accel[rc.accel] += static_cast<int>(total);
    }
    return alloc;
}

}  // namespace nicpool
