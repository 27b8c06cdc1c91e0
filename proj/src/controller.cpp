#include "nicpool/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nicpool {

const char* deploy_status_name(DeployStatus s) {
    switch (s) {
        case DeployStatus::Pending: return "pending";
        case DeployStatus::Running: return "running";
        case DeployStatus::BestEffort: return "best_effort";
        case DeployStatus::Failed: return "failed";
        case DeployStatus::Stopped: return "stopped";
    }
    return "?";
}

// Measurement windows quantize rates by a fraction of a permille; snapping
// to 1 Mbps keeps floor/ceil boundaries in the allocation formula exact.
static double snap_mbps(double gbps) { return std::round(gbps * 1000.0) / 1000.0; }

Controller::Controller(Cluster* cluster, StateFabric* fabric, const UcfRegistry* registry,
                       Engine* engine, ControllerConfig cfg, ProfileOptions profile_opts)
    : cluster_(cluster), fabric_(fabric), registry_(registry), engine_(engine), cfg_(cfg),
      profile_opts_(profile_opts) {
    for (const auto& n : cluster_->nics()) last_ok_[n.nic_id] = 0;
}

void Controller::log(const std::string& kind, const std::string& detail) {
    events_.push_back(ControlEvent{engine_->now(), kind, detail});
}

void Controller::start(SimTime first_tick) {
    struct Rearm {
        Controller* c;
        SimTime interval;
        void operator()() const {
            c->sync_tick(c->engine_->now());
            c->engine_->schedule(c->engine_->now() + interval, EventKind::Control,
                                 Rearm{c, interval});
        }
    };
    engine_->schedule(first_tick, EventKind::Control, Rearm{this, cfg_.sync_interval});
}

AppDeployment& Controller::submit_app(const AppSpec& spec, const PerfTarget& target,
                                      const TrafficSpec& traffic, const DeployOptions& opts) {
    admission_order_.push_back(spec.app_id);
    AppDeployment dep;
    dep.spec = spec;
    dep.target = target;
    dep.opts = opts;
    dep.traffic = traffic;
    dep.status = DeployStatus::Pending;

    auto& slot = deployments_[spec.app_id] = std::move(dep);
    log("submit", spec.app_id);

    ProfileOptions popts = profile_opts_;
    popts.packet_bytes = traffic.packet_bytes;
    try {
        slot.profile = profile_app(spec, *cluster_, registry_, popts);
    } catch (const Error& e) {
        slot.status = DeployStatus::Failed;
        slot.status_reason = e.what();
        log("submit_failed", spec.app_id + ": " + e.what());
        return slot;
    }
    slot.min_latency_us = slot.profile.pipeline_latency_us;
    slot.plan = plan_replication(slot.profile.stage_latency_us);

    bool all_ones = std::all_of(slot.plan.replicas.begin(), slot.plan.replicas.end(),
                                [](long r) { return r == 1; });
    slot.profile.lambda_gbps = snap_mbps(slot.profile.lambda_gbps);
    if (all_ones) {
        slot.measured_t_gbps = slot.profile.lambda_gbps;
    } else {
        try {
            slot.measured_t_gbps = snap_mbps(
                measure_replicated_gbps(spec, slot.plan, *cluster_, registry_, popts));
        } catch (const Error&) {
            slot.measured_t_gbps = slot.profile.lambda_gbps;
        }
    }

    std::vector<ResourceClass> classes;
    for (const auto& st : spec.stages) classes.push_back(st.resource_class);
    slot.alloc = compute_allocation(slot.plan, target.throughput_gbps, slot.measured_t_gbps,
                                    slot.profile.lambda_gbps, classes);

    if (!deploy(slot)) return slot;

    bool latency_ok = !target.latency_us || slot.min_latency_us <= *target.latency_us;
    if (!latency_ok) {
        slot.status = DeployStatus::BestEffort;
        std::ostringstream os;
        os << "minimum latency " << slot.min_latency_us << " us exceeds demand";
        slot.status_reason = os.str();
    }
    log("deployed", spec.app_id + " status=" + deploy_status_name(slot.status));
    return slot;
}

bool Controller::deploy(AppDeployment& dep) {
    try {
        dep.placement = place(dep.spec, dep.alloc, *cluster_, dep.target, dep.opts.mode);
    } catch (const Error& e) {
        dep.status = DeployStatus::Failed;
        dep.status_reason = e.what();
        log("placement_failed", dep.spec.app_id + ": " + e.what());
        return false;
    }
    if (dep.spec.stateful) {
        std::vector<NicId> replicas;
        for (const auto& g : dep.placement.groups)
            for (const auto& r : g.ranges) replicas.push_back(r.nic);
        if (fabric_->has_app(dep.spec.app_id))
            fabric_->set_replicas(dep.spec.app_id, replicas);
        else
            fabric_->register_app(dep.spec.app_id, dep.spec.access_pattern, replicas);
    }
    engine_->instantiate(dep.spec, dep.placement);
    engine_->attach_traffic(dep.spec.app_id, dep.traffic);
    engine_->start_traffic(dep.spec.app_id, engine_->now());
    if (dep.opts.failover) dep.backup_nic = choose_backup(dep.spec, dep.placement);
    dep.status = dep.placement.best_effort ? DeployStatus::BestEffort : DeployStatus::Running;
    if (dep.placement.best_effort) dep.status_reason = "placement below target";
    return true;
}

std::optional<NicId> Controller::choose_backup(const AppSpec& spec,
                                               const Placement& placement) const {
    auto kinds = spec.accelerator_kinds();
    // scarce accelerator kinds weigh more when ranking candidates
    std::map<AcceleratorKind, int> nics_with_kind;
    for (const auto& n : cluster_->nics()) {
        if (n.failed) continue;
        for (auto k : n.accel_kinds()) nics_with_kind[k]++;
    }
    std::optional<NicId> best;
    std::tuple<int, double, int> best_rank{-1, -1.0, -1};  // (reserved, coverage, free)
    for (const auto& n : cluster_->nics()) {
        if (n.failed || placement.touches(n.nic_id)) continue;
        double coverage = 0.0;
        for (auto k : kinds)
            if (n.accel_count(k) > 0) coverage += 1.0 / std::max(1, nics_with_kind[k]);
        std::tuple<int, double, int> rank{n.reserved_backup ? 1 : 0, coverage, n.free_units()};
        if (!best || rank > best_rank) {
            best = n.nic_id;
            best_rank = rank;
        }
    }
    return best;
}

ScalingOutcome Controller::set_target(const std::string& app_id, double new_gbps) {
    AppDeployment& dep = deployment(app_id);
    ScalingOutcome out;
    out.applied_at = engine_->now();
    if (dep.status != DeployStatus::Running && dep.status != DeployStatus::BestEffort) {
        out.noop = true;
        return out;
    }
    if (new_gbps == dep.target.throughput_gbps) {
        out.noop = true;
        log("set_target", app_id + " unchanged");
        return out;
    }

    std::vector<ResourceClass> classes;
    for (const auto& st : dep.spec.stages) classes.push_back(st.resource_class);
    AllocationPlan new_alloc = compute_allocation(dep.plan, new_gbps, dep.measured_t_gbps,
                                                  dep.profile.lambda_gbps, classes);
    PerfTarget new_target = dep.target;
    new_target.throughput_gbps = new_gbps;
    PlacementDelta delta = rescale(dep.spec, dep.placement, new_alloc, *cluster_, new_target);
    engine_->apply_delta(app_id, delta);

    dep.target = new_target;
    dep.alloc = new_alloc;
    out.best_effort = delta.best_effort;
    out.groups_added = static_cast<int>(delta.add_groups.size());
    out.groups_grown = static_cast<int>(delta.grows.size());
    out.groups_shrunk = static_cast<int>(delta.shrinks.size());
    dep.status = delta.best_effort ? DeployStatus::BestEffort : DeployStatus::Running;
    if (dep.spec.stateful) {
        std::vector<NicId> replicas;
        for (const auto& g : dep.placement.groups)
            for (const auto& r : g.ranges) replicas.push_back(r.nic);
        fabric_->set_replicas(app_id, replicas);
    }
    std::ostringstream os;
    os << app_id << " -> " << new_gbps << " Gbps (add=" << out.groups_added
       << " grow=" << out.groups_grown << " shrink=" << out.groups_shrunk << ")";
    log("set_target", os.str());
    return out;
}

void Controller::reclaim_placement(Placement& placement) {
    for (auto& g : placement.groups)
        for (auto& sa : g.stages)
            for (GrantId gid : sa.grants)
                if (!cluster_->grant(gid).reclaimed) cluster_->reclaim(gid);
    placement.groups.clear();
}

void Controller::stop_app(const std::string& app_id) {
    AppDeployment& dep = deployment(app_id);
    engine_->stop_traffic(app_id);
    engine_->teardown_app(app_id);
    reclaim_placement(dep.placement);
    dep.status = DeployStatus::Stopped;
    log("stop_app", app_id);
}

void Controller::fail_nic(NicId nic) {
    cluster_->mark_failed(nic, true);
    failed_unhandled_.insert(nic);
    FailImpact impact = engine_->nic_failed(nic);
    for (auto& [app_id, died] : impact.died) {
        auto it = deployments_.find(app_id);
        if (it == deployments_.end()) continue;
        AppDeployment& dep = it->second;
        for (auto& pkt : died) {
            bool cached = dep.backup_nic && dep.backup.last_sync >= 0 &&
                          pkt.ingress_time >= dep.backup.last_sync;
            if (cached) {
                dep.pending_replay[nic].push_back(std::move(pkt));
            } else {
                engine_->count_loss(app_id, pkt, "nic_failure");
            }
        }
    }
    log("nic_failed", cluster_->nic(nic).name);
}

void Controller::recover_nic(NicId nic) {
    cluster_->mark_failed(nic, false);
    failed_unhandled_.erase(nic);
    last_ok_[nic] = engine_->now();
    log("nic_recovered", cluster_->nic(nic).name);
    // FCFS retry of deployments that failed for lack of resources
    for (const auto& app_id : admission_order_) {
        auto it = deployments_.find(app_id);
        if (it == deployments_.end() || it->second.status != DeployStatus::Failed) continue;
        AppDeployment& dep = it->second;
        dep.pending_replay.clear();
        if (deploy(dep)) log("redeployed", app_id);
    }
}

void Controller::sync_tick(SimTime now) {
    // health checks via connection requests
    for (const auto& n : cluster_->nics()) {
        if (!n.failed) {
            last_ok_[n.nic_id] = now;
        } else if (failed_unhandled_.count(n.nic_id) && now - last_ok_[n.nic_id] >= cfg_.check_interval) {
            handle_failure(n.nic_id, now);
        }
    }

    // backup replication: dirty flow state plus a packet cache snapshot
    for (auto& [app_id, dep] : deployments_) {
        if (!dep.backup_nic) continue;
        if (dep.status != DeployStatus::Running && dep.status != DeployStatus::BestEffort) continue;
        if (dep.spec.stateful) {
            for (const auto& g : dep.placement.groups)
                for (const auto& r : g.ranges)
                    fabric_->sync_dirty_to(r.nic, app_id, dep.backup.tables[r.nic]);
        }
        dep.backup.last_sync = now;
    }

    fabric_->evict_expired(now);
}

RecoveryReport Controller::handle_failure(NicId nic, SimTime now) {
    RecoveryReport report;
    report.failed_nic = nic;
    report.detected_at = now;
    engine_->quarantine_nic(nic);
    failed_unhandled_.erase(nic);

    for (const auto& app_id : admission_order_) {
        auto dit = deployments_.find(app_id);
        if (dit == deployments_.end()) continue;
        AppDeployment& dep = dit->second;
        if (dep.status != DeployStatus::Running && dep.status != DeployStatus::BestEffort) continue;
        if (!dep.placement.touches(nic)) continue;

        RecoveryReport::PerApp pa;
        pa.app_id = app_id;
        pa.lost = 0;

        if (!dep.backup_nic || cluster_->nic(*dep.backup_nic).failed) {
            engine_->stop_traffic(app_id);
            engine_->teardown_app(app_id);
            reclaim_placement(dep.placement);
            dep.status = DeployStatus::Failed;
            dep.status_reason = "BackupUnavailable";
            pa.recovered = false;
            pa.reason = "backup unavailable";
            report.apps.push_back(pa);
            log("failover_failed", app_id + ": backup unavailable");
            continue;
        }
        NicId backup = *dep.backup_nic;

        // rebuild every lost sub-pipeline on the backup NIC
        bool ok = true;
        std::vector<std::tuple<int, int, std::vector<StageAlloc>>> replacements;
        std::vector<GrantId> fresh_grants;
        for (auto& g : dep.placement.groups) {
            for (size_t ri = 0; ri < g.ranges.size() && ok; ++ri) {
                if (g.ranges[ri].nic != nic) continue;
                std::vector<StageAlloc> repl;
                for (int s = g.ranges[ri].lo; s <= g.ranges[ri].hi && ok; ++s) {
                    const StageAlloc& old = g.stages[static_cast<size_t>(s)];
                    StageAlloc sa{s, backup, old.count, {}};
                    const StageSpec& st = dep.spec.stages[static_cast<size_t>(s)];
                    for (int j = 0; j < old.count; ++j) {
                        ResourceVector need = st.resource_class.is_cpu
                                                  ? ResourceVector::cpu(1)
                                                  : ResourceVector::accelerator(st.resource_class.accel, 1);
                        if (!cluster_->can_fit(backup, need)) {
                            ok = false;
                            break;
                        }
                        GrantId gid = cluster_->allocate(backup, need, app_id);
                        sa.grants.push_back(gid);
                        fresh_grants.push_back(gid);
                    }
                    if (ok) repl.push_back(std::move(sa));
                }
                if (ok)
                    replacements.emplace_back(g.group_id, static_cast<int>(ri), std::move(repl));
            }
        }

        if (!ok) {
            for (auto it2 = fresh_grants.rbegin(); it2 != fresh_grants.rend(); ++it2)
                cluster_->reclaim(*it2);
            engine_->stop_traffic(app_id);
            engine_->teardown_app(app_id);
            reclaim_placement(dep.placement);
            dep.status = DeployStatus::Failed;
            dep.status_reason = "backup lacks required resources";
            pa.recovered = false;
            pa.reason = dep.status_reason;
            report.apps.push_back(pa);
            log("failover_failed", app_id + ": " + dep.status_reason);
            continue;
        }

        // reclaim grants stranded on the failed NIC, then swap in the rebuilt ranges
        for (auto& g : dep.placement.groups)
            for (auto& sa : g.stages)
                if (sa.nic == nic)
                    for (GrantId gid : sa.grants)
                        if (!cluster_->grant(gid).reclaimed) cluster_->reclaim(gid);
        for (auto& [gid, ri, repl] : replacements)
            engine_->replace_range(app_id, gid, ri, backup, repl);
        // replace_range updated the engine's copy; mirror it here
        dep.placement = *engine_->placement_of(app_id);

        if (dep.spec.stateful) {
            auto snap = dep.backup.tables.find(nic);
            if (snap != dep.backup.tables.end())
                fabric_->restore(backup, app_id, snap->second, now);
            std::vector<NicId> replicas;
            for (const auto& g : dep.placement.groups)
                for (const auto& r : g.ranges) replicas.push_back(r.nic);
            fabric_->set_replicas(app_id, replicas);
        }

        SimTime recovery_at = now + cfg_.recovery_setup;
        auto rq = dep.pending_replay.find(nic);
        if (rq != dep.pending_replay.end()) {
            std::sort(rq->second.begin(), rq->second.end(), [](const Packet& a, const Packet& b) {
                return std::make_pair(a.flow, a.flow_seq) < std::make_pair(b.flow, b.flow_seq);
            });
            pa.replayed = static_cast<std::int64_t>(rq->second.size());
            engine_->inject_ingress(app_id, std::move(rq->second), recovery_at);
            dep.pending_replay.erase(rq);
        }
        pa.recovered = true;
        report.apps.push_back(pa);
        log("failover", app_id + " -> " + cluster_->nic(backup).name);
    }
    recoveries_.push_back(report);
    return report;
}

AppDeployment& Controller::deployment(const std::string& app_id) {
    auto it = deployments_.find(app_id);
    if (it == deployments_.end()) throw_error(Errc::UnknownApp, app_id);
    return it->second;
}

}  // namespace nicpool
