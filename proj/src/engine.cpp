#include "nicpool/engine.hpp"

#include <algorithm>

namespace nicpool {

Engine::Engine(Cluster* cluster, StateFabric* fabric, const UcfRegistry* registry, EngineConfig cfg)
    : cluster_(cluster), fabric_(fabric), registry_(registry), cfg_(cfg) {
    for (const auto& n : cluster_->nics()) {
        tos_.emplace(n.nic_id, TrafficOrchestrator(n.nic_id));
        nic_stats_[n.nic_id];
    }
}

Engine::RuntimeApp& Engine::app(const std::string& id) {
    auto it = apps_.find(id);
    if (it == apps_.end()) throw_error(Errc::UnknownApp, id);
    return it->second;
}

const Engine::RuntimeApp& Engine::app(const std::string& id) const {
    auto it = apps_.find(id);
    if (it == apps_.end()) throw_error(Errc::UnknownApp, id);
    return it->second;
}

Engine::RuntimeGroup* Engine::group_of(RuntimeApp& a, int group_id) {
    for (auto& g : a.groups)
        if (g.group_id == group_id) return &g;
    return nullptr;
}

Engine::RuntimeRange* Engine::range_of(RuntimeApp& a, const LaneRef& ref) {
    RuntimeGroup* g = group_of(a, ref.group_id);
    if (!g || ref.range_idx < 0 || static_cast<size_t>(ref.range_idx) >= g->ranges.size())
        return nullptr;
    return &g->ranges[static_cast<size_t>(ref.range_idx)];
}

LaneRings* Engine::lane_of(RuntimeApp& a, const LaneRef& ref) {
    RuntimeRange* r = range_of(a, ref);
    if (!r || ref.lane_idx < 0 || static_cast<size_t>(ref.lane_idx) >= r->lanes.size()) return nullptr;
    return &r->lanes[static_cast<size_t>(ref.lane_idx)];
}

void Engine::schedule(SimTime at, EventKind kind, std::function<void()> fn) {
    events_.push(SimEvent{std::max(at, now_), kind, next_event_seq_++, std::move(fn)});
}

void Engine::run_until(SimTime t) {
    while (!events_.empty() && events_.top().time <= t) {
        SimEvent ev = events_.top();
        events_.pop();
        now_ = ev.time;
        ev.fn();
    }
    if (t > now_) now_ = t;
}

// ============================================================
// Instantiation
// ============================================================

void Engine::resolve_pool_models(RuntimeApp& a, const StageSpec& st, const StageAlloc& sa,
                                 StagePool& pool) {
    pool.stage = sa.stage;
    if (st.resource_class.is_cpu) {
        pool.server_models.assign(static_cast<size_t>(sa.count), st.service_model);
    } else {
        // accelerator servers take the granted unit's latency model
        for (GrantId gid : sa.grants) {
            const Grant& g = cluster_->grant(gid);
            for (int uid : g.accel_unit_ids)
                pool.server_models.push_back(
                    cluster_->nic(g.nic_id).accelerators[static_cast<size_t>(uid)].perf_metric);
        }
        while (pool.server_models.size() < static_cast<size_t>(sa.count))
            pool.server_models.push_back(st.service_model);
    }
    pool.busy_until.assign(pool.server_models.size(), 0);
    pool.busy.assign(pool.server_models.size(), false);
    pool.active_servers = static_cast<int>(pool.server_models.size());
}

void Engine::build_group(RuntimeApp& a, const GroupPlacement& gp) {
    RuntimeGroup g;
    g.group_id = gp.group_id;
    for (const auto& ri : gp.ranges) {
        RuntimeRange r;
        r.nic = ri.nic;
        r.lo = ri.lo;
        r.hi = ri.hi;
        for (int lane = 0; lane < ri.lanes; ++lane) {
            LaneRings lr;
            lr.ingress = RingBuffer(RingRole::Ingress, cfg_.ring_capacity);
            lr.inter.assign(static_cast<size_t>(r.len() - 1),
                            RingBuffer(RingRole::InterStage, cfg_.ring_capacity));
            lr.egress = RingBuffer(RingRole::Egress, cfg_.ring_capacity);
            r.lanes.push_back(std::move(lr));
            r.lane_dead.push_back(false);
        }
        for (int s = r.lo; s <= r.hi; ++s) {
            StagePool pool;
            resolve_pool_models(a, a.spec.stages[static_cast<size_t>(s)],
                                gp.stages[static_cast<size_t>(s)], pool);
            r.pools.push_back(std::move(pool));
        }
        g.ranges.push_back(std::move(r));
    }
    a.groups.push_back(std::move(g));
}

void Engine::instantiate(const AppSpec& app_spec, const Placement& placement) {
    for (const auto& gp : placement.groups)
        for (const auto& sa : gp.stages)
            for (GrantId gid : sa.grants) {
                const Grant& g = cluster_->grant(gid);
                if (g.reclaimed || g.nic_id != sa.nic)
                    throw_error(Errc::GrantMissing,
                                "grant " + std::to_string(gid) + " for " + app_spec.app_id);
            }

    RuntimeApp a;
    a.spec = app_spec;
    a.placement = placement;
    a.anchor = placement.anchor_nic();
    for (const auto& gp : placement.groups) build_group(a, gp);
    apps_.emplace(app_spec.app_id, std::move(a));
}

// ============================================================
// Traffic generation
// ============================================================

void Engine::attach_traffic(const std::string& app_id, const TrafficSpec& spec) {
    RuntimeApp& a = app(app_id);
    a.traffic = spec;
    a.traffic_attached = true;
    a.payload_rng = mix_seed(cfg_.seed ^ spec.seed, app_id);
    a.flow_set.clear();
    a.next_seq.assign(static_cast<size_t>(spec.flows), 0);
    for (int f = 0; f < spec.flows; ++f) {
        FiveTuple ft;
        ft.src_ip = 0x0a000000u | static_cast<std::uint32_t>(f + 1);
        ft.dst_ip = 0x0a010000u | static_cast<std::uint32_t>((f % 16) + 1);
        ft.src_port = static_cast<std::uint16_t>(1024 + f);
        ft.dst_port = 80;
        ft.proto = a.spec.abstraction == Abstraction::SocketLevel ? Proto::Tcp : Proto::Udp;
        a.flow_set.push_back(ft);
    }
}

double Engine::analytic_capacity_gbps(const std::string& app_id) const {
    const RuntimeApp& a = app(app_id);
    double pkt_bits = 8.0 * a.traffic.packet_bytes;
    double total = 0.0;
    for (const auto& g : a.groups) {
        if (!g.alive) continue;
        double group_rate = 1e300;  // packets per us
        bool usable = true;
        for (const auto& r : g.ranges) {
            if (!r.alive) usable = false;
            for (const auto& pool : r.pools) {
                double rate = 0.0;
                for (int s = 0; s < pool.active_servers; ++s) {
                    SimTime st = pool.server_models[static_cast<size_t>(s)].service_time(
                        static_cast<std::uint32_t>(a.traffic.packet_bytes));
                    if (st > 0) rate += 1000.0 / static_cast<double>(st);  // pkts/us
                }
                if (pool.active_servers > 0) group_rate = std::min(group_rate, rate);
            }
        }
        if (usable && group_rate < 1e300) total += group_rate * pkt_bits / 1000.0;  // Gbps
    }
    return total;
}

void Engine::refresh_saturate_rate(const std::string& app_id) {
    RuntimeApp& a = app(app_id);
    if (!a.traffic.saturate) return;
    // overdrive the first stage, not the chain bottleneck: stages ahead of
    // each segment minimum must stay fed for the bubble-free property
    double pkt_bits = 8.0 * a.traffic.packet_bytes;
    double ingress_rate = 0.0;  // packets per us across groups
    for (const auto& g : a.groups) {
        if (!g.alive || g.ranges.empty() || !g.ranges.front().alive) continue;
        const StagePool& head = g.ranges.front().pools.front();
        for (int s = 0; s < head.active_servers; ++s) {
            SimTime st = head.server_models[static_cast<size_t>(s)].service_time(
                static_cast<std::uint32_t>(a.traffic.packet_bytes));
            if (st > 0) ingress_rate += 1000.0 / static_cast<double>(st);
        }
    }
    double cap = std::max(analytic_capacity_gbps(app_id), ingress_rate * pkt_bits / 1000.0);
    a.gen_rate_gbps = std::max(cap * cfg_.saturate_overdrive, 0.05);
}

void Engine::start_traffic(const std::string& app_id, SimTime at) {
    RuntimeApp& a = app(app_id);
    if (!a.traffic_attached) throw_error(Errc::ValidationError, "no traffic attached to " + app_id);
    a.traffic_on = true;
    a.gen_epoch++;
    if (a.traffic.saturate)
        refresh_saturate_rate(app_id);
    else
        a.gen_rate_gbps = a.traffic.rate_gbps;
    std::uint64_t epoch = a.gen_epoch;
    schedule(at, EventKind::Tick, [this, app_id, epoch] { generator_tick(app_id, epoch); });
}

void Engine::stop_traffic(const std::string& app_id) {
    RuntimeApp& a = app(app_id);
    a.traffic_on = false;
    a.gen_epoch++;
}

Packet Engine::make_packet(RuntimeApp& a, size_t flow_idx) {
    Packet p;
    p.flow = a.flow_set[flow_idx];
    p.payload_len = static_cast<std::uint32_t>(a.traffic.packet_bytes);
    switch (a.traffic.fill) {
        case PayloadFill::None: break;
        case PayloadFill::Zeros: p.payload.assign(p.payload_len, 0); break;
        case PayloadFill::Seeded: {
            p.payload.resize(p.payload_len);
            std::uint64_t x = a.payload_rng;
            for (auto& b : p.payload) {
                x = mix_seed(x);
                b = static_cast<std::uint8_t>(x);
            }
            a.payload_rng = x;
            break;
        }
    }
    p.flow_seq = a.next_seq[flow_idx]++;
    p.socket_message = a.spec.abstraction == Abstraction::SocketLevel;
    p.uid = next_uid_++;
    return p;
}

void Engine::generator_tick(const std::string& app_id, std::uint64_t epoch) {
    auto it = apps_.find(app_id);
    if (it == apps_.end()) return;
    RuntimeApp& a = it->second;
    if (!a.traffic_on || epoch != a.gen_epoch) return;

    std::vector<Packet> batch;
    batch.reserve(static_cast<size_t>(cfg_.batch_size));
    for (int i = 0; i < cfg_.batch_size; ++i) {
        size_t fi = a.rr_flow % a.flow_set.size();
        a.rr_flow++;
        batch.push_back(make_packet(a, fi));
        a.stats.generated++;
    }
    to_partition(a, std::move(batch));

    double batch_bits = 8.0 * a.traffic.packet_bytes * cfg_.batch_size;
    SimTime interval = std::max<SimTime>(1, static_cast<SimTime>(std::llround(batch_bits / a.gen_rate_gbps)));
    schedule(now_ + interval, EventKind::Tick, [this, app_id, epoch] { generator_tick(app_id, epoch); });
}

// ============================================================
// Ingress partition and routing
// ============================================================

std::vector<LaneView> Engine::ingress_views(RuntimeApp& a) const {
    std::vector<LaneView> views;
    for (const auto& g : a.groups) {
        if (!g.alive || g.ranges.empty()) continue;
        const RuntimeRange& r = g.ranges.front();
        for (size_t lane = 0; lane < r.lanes.size(); ++lane) {
            if (r.lane_dead[lane] || !r.lanes[lane].accepting) continue;
            views.push_back(LaneView{LaneRef{g.group_id, 0, static_cast<int>(lane)}, r.nic,
                                     r.lanes[lane].ingress.free_slots(),
                                     r.lanes[lane].ingress.capacity(), true});
        }
    }
    return views;
}

std::vector<LaneView> Engine::range_views(RuntimeApp& a, int group_id, int range_idx) const {
    std::vector<LaneView> views;
    for (const auto& g : a.groups) {
        if (g.group_id != group_id || !g.alive) continue;
        if (range_idx < 0 || static_cast<size_t>(range_idx) >= g.ranges.size()) continue;
        const RuntimeRange& r = g.ranges[static_cast<size_t>(range_idx)];
        if (!r.alive) continue;
        for (size_t lane = 0; lane < r.lanes.size(); ++lane) {
            if (r.lane_dead[lane] || !r.lanes[lane].accepting) continue;
            views.push_back(LaneView{LaneRef{g.group_id, range_idx, static_cast<int>(lane)}, r.nic,
                                     r.lanes[lane].ingress.free_slots(),
                                     r.lanes[lane].ingress.capacity(), true});
        }
    }
    return views;
}

void Engine::to_partition(RuntimeApp& a, std::vector<Packet> batch) {
    std::int64_t batch_seq = a.next_batch_seq++;
    TrafficOrchestrator& anchor_to = to(a.anchor);
    auto views = ingress_views(a);
    for (auto& pkt : batch) {
        pkt.batch_seq = batch_seq;
        pkt.ingress_time = now_;
        pkt.pkt_meta["wire_len"] = pkt.payload_len;

        FlowTableEntry* e = anchor_to.entry_if(a.spec.app_id, pkt.flow);
        if (e) e->last_seen = now_;
        if (e && e->migrating) {
            if (static_cast<int>(e->migration_buffer.size()) >= cfg_.migration_buffer_pkts) {
                drop_packet(a, pkt, "migration_overflow", false);
                continue;
            }
            a.inflight.emplace(pkt.uid, InFlightRec{pkt, InFlightRec::Loc::Buffered, a.anchor, {}});
            e->migration_buffer.push_back(std::move(pkt));
            continue;
        }
        if (views.empty()) {
            drop_packet(a, pkt, "no_pipeline", false);
            continue;
        }
        RouteDecision dec =
            anchor_to.route_ingress(a.spec.app_id, pkt.flow, views, cfg_.high_watermark, now_);
        if (!dec.lane.valid()) {
            nic_stats_[a.anchor].to_drops++;
            drop_packet(a, pkt, "ingress_full", false);
            continue;
        }
        nic_stats_[a.anchor].redirections++;
        accept_packet(a, std::move(pkt), dec, false);
        // refresh the view the router just consumed
        for (auto& v : views)
            if (v.ref == dec.lane) v.free_slots = std::max(0, v.free_slots - 1);
    }
}

void Engine::accept_packet(RuntimeApp& a, Packet&& pkt, const RouteDecision& dec, bool replay) {
    a.stats.accepted++;
    a.inflight.emplace(pkt.uid, InFlightRec{pkt, InFlightRec::Loc::InTransfer, dec.nic, dec.lane});
    SimTime cost = us_to_time(cfg_.to_ingress_overhead_us);
    if (dec.nic != a.anchor)
        cost += us_to_time(cfg_.to_redirect_overhead_us) + hop_cost(a.anchor, dec.nic, pkt.payload_len);
    (void)replay;
    std::string app_id = a.spec.app_id;
    LaneRef lane = dec.lane;
    Packet moved = std::move(pkt);
    schedule(now_ + cost, EventKind::Arrival,
             [this, app_id, lane, moved = std::move(moved)]() mutable {
                 ring_push(app_id, lane, std::move(moved));
             });
}

SimTime Engine::hop_cost(NicId from, NicId to_nic, std::int64_t bytes) const {
    if (from == to_nic) return 0;
    double bw = std::min(cluster_->nic(from).port_bw_gbps, cluster_->nic(to_nic).port_bw_gbps);
    return cluster_->network().one_way(from, to_nic) + serialization_time(bytes, bw);
}

void Engine::ring_push(const std::string& app_id, LaneRef ref, Packet pkt) {
    auto it = apps_.find(app_id);
    if (it == apps_.end()) return;
    RuntimeApp& a = it->second;
    auto reg = a.inflight.find(pkt.uid);
    if (reg == a.inflight.end()) return;  // classified dead mid-flight

    RuntimeRange* r = range_of(a, ref);
    LaneRings* lane = lane_of(a, ref);
    if (!r || !lane) {
        drop_packet(a, pkt, "stale_subpipe", false);
        return;
    }
    if (!r->alive) {
        // NIC is black-holing between failure and detection
        drop_packet(a, pkt, "blackhole", false);
        return;
    }
    FiveTuple flow = pkt.flow;
    if (!lane->ingress.push(std::move(pkt))) {
        Packet& dead = *const_cast<Packet*>(&reg->second.ingress_copy);
        drop_packet(a, dead, "ring_full", false);
        return;
    }
    reg->second.loc = InFlightRec::Loc::InLane;
    reg->second.nic = r->nic;
    reg->second.lane = ref;
    lane->inflight++;
    to(r->nic).entry(app_id, flow).inflight[ref]++;
    try_dispatch(a, *group_of(a, ref.group_id), *r, 0);
}

// ============================================================
// Stage execution
// ============================================================

StateCtx& Engine::state_ctx(RuntimeApp& a, NicId nic) {
    if (!a.spec.stateful || !fabric_ || !fabric_->has_app(a.spec.app_id)) return null_ctx_;
    auto key = std::make_pair(nic, a.spec.app_id);
    auto it = state_ctxs_.find(key);
    if (it == state_ctxs_.end())
        it = state_ctxs_
                 .emplace(key, std::make_unique<FabricStateCtx>(fabric_, nic, a.spec.app_id))
                 .first;
    it->second->set_now(now_);
    return *it->second;
}

StageResult Engine::exec_in_pipeline(RuntimeApp& a, RuntimeRange& r, StagePool& pool,
                                     const StageSpec& st, Packet& pkt, SimTime& extra_cost) {
    StateCtx& ctx = state_ctx(a, r.nic);
    StageResult res;
    switch (st.kind) {
        case StageKind::PktTrans:
        case StageKind::PktFlt:
        case StageKind::AccelFn:
            res = execute_stage(st, &pkt, ctx, *registry_);
            break;
        case StageKind::FlowExt: {
            auto& win = pool.windows[pkt.flow];
            win.push_back(pkt);
            if (static_cast<int>(win.size()) > st.window_size) win.pop_front();
            std::int64_t cnt = ++pool.window_counts[pkt.flow];
            if (cnt >= st.window_size && (cnt - st.window_size) % st.slide_interval == 0) {
                std::vector<Packet> snapshot(win.begin(), win.end());
                StageResult emit = execute_stage(st, std::span<const Packet>(snapshot), ctx, *registry_);
                if (emit.ucf_panic) {
                    a.stats.ucf_panics++;
                } else if (emit.emitted) {
                    a.stats.emitted_flow_records++;
                    a.flow_records[pkt.flow] = *emit.emitted;
                }
            }
            res.kind = StageResult::Kind::Pass;  // packets pass through unmodified
            break;
        }
        case StageKind::FlowTrans: {
            auto& rec = a.flow_records[pkt.flow];
            rec.flow = pkt.flow;
            res = execute_stage(st, &rec, ctx, *registry_);
            break;
        }
        case StageKind::SocketEpoll: {
            if (!pkt.socket_message) {
                res.kind = StageResult::Kind::Pass;
                break;
            }
            if (!a.sockets.is_registered(pkt.flow)) a.sockets.register_socket(pkt.flow);
            SocketEvent ev;
            ev.socket_id = 0;
            ev.conn = pkt.flow;
            ev.kind = EpollKind::EpollIn;
            ev.message = pkt.payload;
            res = execute_stage(st, &ev, ctx, *registry_);
            break;
        }
    }
    extra_cost += ctx.take_cost();
    return res;
}

void Engine::try_dispatch(RuntimeApp& a, RuntimeGroup& g, RuntimeRange& r, int rel_stage) {
    if (!r.alive || !g.alive) return;
    StagePool& pool = r.pools[static_cast<size_t>(rel_stage)];
    while (true) {
        int srv = pool.free_server();
        if (srv < 0) return;
        // round-robin over non-empty lane inputs
        int chosen = -1;
        size_t n = r.lanes.size();
        for (size_t k = 0; k < n; ++k) {
            size_t lane = (pool.rr_cursor + k) % n;
            if (r.lane_dead[lane]) continue;
            if (!r.lanes[lane].input_of(rel_stage).empty()) {
                chosen = static_cast<int>(lane);
                break;
            }
        }
        if (chosen < 0) return;
        pool.rr_cursor = static_cast<size_t>(chosen) + 1;

        Packet pkt = r.lanes[static_cast<size_t>(chosen)].input_of(rel_stage).pop();
        const StageSpec& st = a.spec.stages[static_cast<size_t>(r.lo + rel_stage)];
        std::uint32_t input_len = pkt.payload_len;
        SimTime extra = 0;
        StageResult result = exec_in_pipeline(a, r, pool, st, pkt, extra);
        if (result.ucf_panic) a.stats.ucf_panics++;
        SimTime svc = pool.server_models[static_cast<size_t>(srv)].service_time(input_len) + extra;
        pool.busy[static_cast<size_t>(srv)] = true;
        pool.busy_until[static_cast<size_t>(srv)] = now_ + svc;
        pool.busy_ns += svc;
        pool.service_ns += svc;
        pool.served++;
        bump_busy(r.nic, st.resource_class, svc);

        LaneRef ref{g.group_id, 0, chosen};
        // range_idx of r within g
        for (size_t ri = 0; ri < g.ranges.size(); ++ri)
            if (&g.ranges[ri] == &r) ref.range_idx = static_cast<int>(ri);
        std::string app_id = a.spec.app_id;
        std::uint64_t epoch = r.epoch;
        schedule(now_ + svc, EventKind::StageDone,
                 [this, app_id, ref, rel_stage, srv, pkt = std::move(pkt), result, epoch]() mutable {
                     on_stage_done(app_id, ref, rel_stage, srv, std::move(pkt), result, epoch);
                 });
    }
}

void Engine::bump_busy(NicId nic, const ResourceClass& rc, SimTime dur) {
    NicStats& ns = nic_stats_[nic];
    if (rc.is_cpu)
        ns.cpu_busy_ns += dur;
    else
        ns.accel_busy_ns[rc.accel] += dur;
}

void Engine::on_stage_done(const std::string& app_id, LaneRef ref, int rel_stage, int server,
                           Packet pkt, StageResult result, std::uint64_t dispatch_epoch) {
    auto it = apps_.find(app_id);
    if (it == apps_.end()) return;
    RuntimeApp& a = it->second;
    RuntimeGroup* g = group_of(a, ref.group_id);
    RuntimeRange* r = g ? range_of(a, ref) : nullptr;
    if (!g || !r || r->epoch != dispatch_epoch) return;  // range rebuilt under us

    StagePool& pool = r->pools[static_cast<size_t>(rel_stage)];
    pool.busy[static_cast<size_t>(server)] = false;

    if (!r->alive) return;  // died with the NIC; classification already done

    auto reg = a.inflight.find(pkt.uid);
    if (reg == a.inflight.end()) {
        try_dispatch(a, *g, *r, rel_stage);
        return;
    }

    if (result.kind == StageResult::Kind::Drop) {
        note_lane_exit(a, ref, pkt.flow);
        drop_packet(a, pkt, result.ucf_panic ? "ucf_panic" : "filtered", true);
    } else if (rel_stage < r->len() - 1) {
        FiveTuple flow = pkt.flow;
        if (!r->lanes[static_cast<size_t>(ref.lane_idx)].inter[static_cast<size_t>(rel_stage)].push(
                std::move(pkt))) {
            Packet& dead = *const_cast<Packet*>(&reg->second.ingress_copy);
            note_lane_exit(a, ref, flow);
            drop_packet(a, dead, "ring_full", true);
        } else {
            try_dispatch(a, *g, *r, rel_stage + 1);
        }
    } else {
        range_exit(a, *g, *r, ref, std::move(pkt));
    }
    try_dispatch(a, *g, *r, rel_stage);
}

void Engine::range_exit(RuntimeApp& a, RuntimeGroup& g, RuntimeRange& r, LaneRef ref, Packet&& pkt) {
    // egress ring is drained by the orchestrator within the same event
    auto& egress = r.lanes[static_cast<size_t>(ref.lane_idx)].egress;
    egress.push(std::move(pkt));
    Packet out = egress.pop();
    note_lane_exit(a, ref, out.flow);

    bool last_range = static_cast<size_t>(ref.range_idx) + 1 == g.ranges.size();
    std::string app_id = a.spec.app_id;
    auto reg = a.inflight.find(out.uid);
    if (reg == a.inflight.end()) return;

    if (last_range) {
        SimTime cost = us_to_time(cfg_.to_redirect_overhead_us) +
                       hop_cost(r.nic, a.anchor, out.payload_len);
        reg->second.loc = InFlightRec::Loc::InTransfer;
        reg->second.nic = a.anchor;
        reg->second.lane = LaneRef{};
        schedule(now_ + cost, EventKind::TransferDone,
                 [this, app_id, out = std::move(out)]() mutable { host_deliver(app_id, std::move(out)); });
        return;
    }

    int next_idx = ref.range_idx + 1;
    RuntimeRange& next = g.ranges[static_cast<size_t>(next_idx)];
    RouteDecision dec;
    if (g.alive && next.alive) {
        auto views = range_views(a, g.group_id, next_idx);
        dec = to(next.nic).route_range(app_id, out.flow, g.group_id, next_idx, views, now_);
    }
    if (!dec.lane.valid()) {
        // sub-pipeline gone mid-flight: re-route onto any live group whose
        // range starts exactly where this packet left off
        for (auto& g2 : a.groups) {
            if (!g2.alive) continue;
            for (size_t ri = 0; ri < g2.ranges.size(); ++ri) {
                auto& r2 = g2.ranges[ri];
                if (!r2.alive || r2.lo != r.hi + 1) continue;
                auto views = range_views(a, g2.group_id, static_cast<int>(ri));
                dec = to(r2.nic).route_range(app_id, out.flow, g2.group_id, static_cast<int>(ri),
                                             views, now_);
                if (dec.lane.valid()) break;
            }
            if (dec.lane.valid()) break;
        }
    }
    if (!dec.lane.valid()) {
        nic_stats_[r.nic].to_drops++;
        drop_packet(a, out, "stale_subpipe", false);
        return;
    }
    nic_stats_[dec.nic].redirections++;
    out.subpipe_seq = dec.lane.range_idx;
    SimTime cost = us_to_time(cfg_.to_redirect_overhead_us) + hop_cost(r.nic, dec.nic, out.payload_len);
    reg->second.loc = InFlightRec::Loc::InTransfer;
    reg->second.nic = dec.nic;
    reg->second.lane = dec.lane;
    LaneRef lane = dec.lane;
    schedule(now_ + cost, EventKind::Arrival,
             [this, app_id, lane, out = std::move(out)]() mutable {
                 ring_push(app_id, lane, std::move(out));
             });
}

void Engine::host_deliver(const std::string& app_id, Packet pkt) {
    auto it = apps_.find(app_id);
    if (it == apps_.end()) return;
    RuntimeApp& a = it->second;
    auto reg = a.inflight.find(pkt.uid);
    if (reg == a.inflight.end()) return;
    a.inflight.erase(reg);

    auto releases = a.aggregator.on_delivered(std::move(pkt), now_, a.stats);
    for (auto& rel : releases) {
        a.stats.released++;
        std::int64_t bits = 8 * (rel.pkt.pkt_meta.count("wire_len") ? rel.pkt.pkt_meta["wire_len"]
                                                                    : rel.pkt.payload_len);
        a.stats.released_bits += bits;
        a.stats.bin_bits[rel.at / cfg_.bin_width] += bits;
        SimTime lat = rel.at - rel.pkt.ingress_time;
        a.stats.latency_sum += lat;
        a.stats.latency_count++;
        if (a.stats.latency_count % a.stats.sample_stride == 0) {
            a.stats.latency_samples.push_back(lat);
            if (a.stats.latency_samples.size() > cfg_.max_latency_samples) {
                // deterministic decimation: keep every other sample, double the stride
                std::vector<SimTime> kept;
                kept.reserve(a.stats.latency_samples.size() / 2);
                for (size_t i = 1; i < a.stats.latency_samples.size(); i += 2)
                    kept.push_back(a.stats.latency_samples[i]);
                a.stats.latency_samples = std::move(kept);
                a.stats.sample_stride *= 2;
            }
        }
        if (release_probe) release_probe(app_id, rel.pkt);
    }
    poke_migration(a, pkt.flow);
    check_drains(a);
}

void Engine::drop_packet(RuntimeApp& a, Packet& pkt, const std::string& reason, bool had_entry) {
    (void)had_entry;
    a.stats.drops[reason]++;
    a.stats.bin_drops[now_ / cfg_.bin_width]++;
    a.inflight.erase(pkt.uid);
    auto releases = a.aggregator.on_dropped(pkt.flow, pkt.flow_seq, now_, a.stats);
    for (auto& rel : releases) {
        a.stats.released++;
        std::int64_t bits = 8 * (rel.pkt.pkt_meta.count("wire_len") ? rel.pkt.pkt_meta["wire_len"]
                                                                    : rel.pkt.payload_len);
        a.stats.released_bits += bits;
        a.stats.bin_bits[rel.at / cfg_.bin_width] += bits;
        SimTime lat = rel.at - rel.pkt.ingress_time;
        a.stats.latency_sum += lat;
        a.stats.latency_count++;
        if (a.stats.latency_count % a.stats.sample_stride == 0)
            a.stats.latency_samples.push_back(lat);
        if (release_probe) release_probe(a.spec.app_id, rel.pkt);
    }
    poke_migration(a, pkt.flow);
}

void Engine::note_lane_exit(RuntimeApp& a, const LaneRef& ref, const FiveTuple& flow) {
    LaneRings* lane = lane_of(a, ref);
    RuntimeRange* r = range_of(a, ref);
    if (lane && lane->inflight > 0) lane->inflight--;
    if (r) {
        FlowTableEntry* e = to(r->nic).entry_if(a.spec.app_id, flow);
        if (e) {
            auto it = e->inflight.find(ref);
            if (it != e->inflight.end() && it->second > 0) it->second--;
            if (e->migrating) maybe_complete_migration(a, *e);
        }
    }
    check_drains(a);
}

// ============================================================
// Migration
// ============================================================

MigrationReport Engine::migrate_flow(const std::string& app_id, const FiveTuple& flow, LaneRef src,
                                     LaneRef dst) {
    RuntimeApp& a = app(app_id);
    RuntimeRange* dst_range = range_of(a, dst);
    if (!dst_range || !dst_range->alive) throw_error(Errc::DstUnavailable, dst.str());

    MigrationReport rep;
    rep.flow = flow;
    rep.src = src;
    rep.dst = dst;
    RuntimeRange* src_range = range_of(a, src);
    rep.cross_nic = !src_range || src_range->nic != dst_range->nic;

    FlowTableEntry& e = to(a.anchor).entry(app_id, flow);
    e.migrating = true;
    e.migrate_dst = dst;
    to(a.anchor).migrations_started++;
    nic_stats_[a.anchor].migrations++;
    maybe_complete_migration(a, e);
    return rep;
}

void Engine::maybe_complete_migration(RuntimeApp& a, FlowTableEntry& e) {
    if (!e.migrating) return;
    if (e.inflight_total() > 0) return;
    // anything of this flow still in the old lanes or on the wire blocks;
    // only the migration buffer itself is exempt
    for (const auto& [uid, rec] : a.inflight) {
        if (rec.loc != InFlightRec::Loc::Buffered && rec.ingress_copy.flow == e.flow) return;
    }
    complete_migration(a, e);
}

void Engine::poke_migration(RuntimeApp& a, const FiveTuple& flow) {
    FlowTableEntry* e = to(a.anchor).entry_if(a.spec.app_id, flow);
    if (e && e->migrating) maybe_complete_migration(a, *e);
}

void Engine::complete_migration(RuntimeApp& a, FlowTableEntry& e) {
    LaneRef dst = e.migrate_dst;
    RuntimeRange* r = range_of(a, dst);
    LaneRings* lane = lane_of(a, dst);
    if (!r || !r->alive || !lane || lane->accepting == false) {
        // destination vanished; fall back to the emptiest live lane
        auto views = ingress_views(a);
        const LaneView* best = nullptr;
        for (const auto& v : views)
            if (!best || v.free_slots > best->free_slots) best = &v;
        if (!best) {
            e.migrating = false;  // cleared first: dropping re-enters the checks
            std::deque<Packet> doomed;
            doomed.swap(e.migration_buffer);
            for (auto& pkt : doomed) drop_packet(a, pkt, "migration_lost", false);
            return;
        }
        dst = best->ref;
        r = range_of(a, dst);
    }

    // cross-NIC moves replicate flow state and ship the cached packets
    NicId src_nic = a.anchor;
    if (!e.pinned.empty()) {
        RuntimeRange* old_range = range_of(a, e.pinned.front());
        if (old_range) src_nic = old_range->nic;
    }
    SimTime cost = 0;
    if (src_nic != r->nic) {
        std::int64_t state_bytes = 0;
        if (a.spec.stateful && fabric_ && fabric_->has_app(a.spec.app_id))
            state_bytes = fabric_->migrate_entries(src_nic, r->nic, a.spec.app_id,
                                                   flow_state_prefix(e.flow), now_);
        std::int64_t pkt_bytes = 0;
        for (const auto& p : e.migration_buffer) pkt_bytes += p.payload_len;
        cost = cluster_->network().rtt_time(src_nic, r->nic) +
               hop_cost(src_nic, r->nic, state_bytes + pkt_bytes);
    }

    e.migrating = false;
    e.pinned.assign(1, dst);
    std::deque<Packet> buffered;
    buffered.swap(e.migration_buffer);
    std::string app_id = a.spec.app_id;
    LaneRef target = dst;
    SimTime resume_at = now_ + cost;
    for (auto& pkt : buffered) {
        auto reg = a.inflight.find(pkt.uid);
        if (reg != a.inflight.end()) {
            reg->second.loc = InFlightRec::Loc::InTransfer;
            reg->second.nic = r->nic;
            reg->second.lane = target;
        }
        schedule(resume_at, EventKind::Arrival,
                 [this, app_id, target, pkt = std::move(pkt)]() mutable {
                     ring_push(app_id, target, std::move(pkt));
                 });
    }
}

// ============================================================
// Rescale application
// ============================================================

void Engine::apply_delta(const std::string& app_id, const PlacementDelta& delta) {
    RuntimeApp& a = app(app_id);

    for (const auto& gg : delta.grows) {
        RuntimeGroup* g = group_of(a, gg.group_id);
        if (!g) continue;
        for (const auto& add : gg.added) {
            if (add.count == 0) continue;
            for (auto& r : g->ranges) {
                if (add.stage < r.lo || add.stage > r.hi) continue;
                StagePool& pool = r.pools[static_cast<size_t>(add.stage - r.lo)];
                const StageSpec& st = a.spec.stages[static_cast<size_t>(add.stage)];
                StagePool extra;
                resolve_pool_models(a, st, add, extra);
                for (auto& m : extra.server_models) pool.server_models.push_back(m);
                pool.busy_until.resize(pool.server_models.size(), 0);
                pool.busy.resize(pool.server_models.size(), false);
                pool.active_servers += add.count;
            }
        }
        for (size_t ri = 0; ri < g->ranges.size() && ri < gg.new_lanes.size(); ++ri) {
            RuntimeRange& r = g->ranges[ri];
            while (static_cast<int>(r.lanes.size()) < gg.new_lanes[ri]) {
                LaneRings lr;
                lr.ingress = RingBuffer(RingRole::Ingress, cfg_.ring_capacity);
                lr.inter.assign(static_cast<size_t>(r.len() - 1),
                                RingBuffer(RingRole::InterStage, cfg_.ring_capacity));
                lr.egress = RingBuffer(RingRole::Egress, cfg_.ring_capacity);
                r.lanes.push_back(std::move(lr));
                r.lane_dead.push_back(false);
            }
            for (int s = 0; s < r.len(); ++s) try_dispatch(a, *g, r, s);
        }
    }

    for (const auto& gp : delta.add_groups) build_group(a, gp);

    for (const auto& gs : delta.shrinks) {
        RuntimeGroup* g = group_of(a, gs.group_id);
        if (!g) continue;
        DrainTask task;
        task.group_id = gs.group_id;
        task.grants = gs.reclaim_after_drain;
        task.remove_group = gs.remove_group;

        std::vector<LaneRef> draining;
        for (size_t ri = 0; ri < g->ranges.size(); ++ri) {
            RuntimeRange& r = g->ranges[ri];
            int keep = gs.remove_group ? 0
                                       : (ri < gs.new_lanes.size() ? gs.new_lanes[ri]
                                                                   : static_cast<int>(r.lanes.size()));
            for (size_t lane = static_cast<size_t>(keep); lane < r.lanes.size(); ++lane) {
                if (r.lane_dead[lane] || !r.lanes[lane].accepting) continue;
                r.lanes[lane].accepting = false;
                draining.push_back(LaneRef{g->group_id, static_cast<int>(ri), static_cast<int>(lane)});
            }
            if (!gs.remove_group) {
                for (int s = r.lo; s <= r.hi; ++s) {
                    int remove = gs.remove_per_stage[static_cast<size_t>(s)];
                    if (remove > 0) {
                        StagePool& pool = r.pools[static_cast<size_t>(s - r.lo)];
                        pool.active_servers = std::max(0, pool.active_servers - remove);
                    }
                }
            }
        }
        if (gs.remove_group) g->alive = false;
        task.lanes = draining;

        // migrate flows pinned to draining ingress lanes
        auto views = ingress_views(a);
        for (auto& [flow, e] : to(a.anchor).table(app_id)) {
            LaneRef src;
            for (const auto& p : e.pinned)
                if (std::find(draining.begin(), draining.end(), p) != draining.end()) src = p;
            if (!src.valid()) continue;
            const LaneView* best = nullptr;
            for (const auto& v : views)
                if (std::find(draining.begin(), draining.end(), v.ref) == draining.end())
                    if (!best || v.free_slots > best->free_slots) best = &v;
            if (best) migrate_flow(app_id, flow, src, best->ref);
        }
        // downstream pins re-route on the next hop
        for (auto& [nic, torch] : tos_)
            for (const auto& lref : draining) torch.forget_lane(app_id, lref);

        a.drain_tasks.push_back(std::move(task));
    }

    if (a.traffic.saturate) refresh_saturate_rate(app_id);
    check_drains(a);
}

void Engine::check_drains(RuntimeApp& a) {
    if (a.drain_tasks.empty()) return;
    for (size_t t = a.drain_tasks.size(); t-- > 0;) {
        DrainTask& task = a.drain_tasks[t];
        bool done = true;
        for (const auto& ref : task.lanes) {
            LaneRings* lane = lane_of(a, ref);
            if (lane && lane->inflight > 0) {
                done = false;
                break;
            }
        }
        if (done) {
            for (const auto& [uid, rec] : a.inflight) {
                if (rec.loc != InFlightRec::Loc::InTransfer) continue;
                if (std::find(task.lanes.begin(), task.lanes.end(), rec.lane) != task.lanes.end()) {
                    done = false;
                    break;
                }
            }
        }
        if (!done) continue;
        for (const auto& ref : task.lanes) {
            LaneRings* lane = lane_of(a, ref);
            RuntimeRange* r = range_of(a, ref);
            if (lane && r) {
                r->lane_dead[static_cast<size_t>(ref.lane_idx)] = true;
                lane->ingress.slots().clear();
                for (auto& ring : lane->inter) ring.slots().clear();
            }
            for (auto& [nic, torch] : tos_) torch.forget_lane(a.spec.app_id, ref);
        }
        for (GrantId gid : task.grants) {
            const Grant& g = cluster_->grant(gid);
            if (!g.reclaimed) cluster_->reclaim(gid);
        }
        a.drain_tasks.erase(a.drain_tasks.begin() + static_cast<std::ptrdiff_t>(t));
        if (a.traffic.saturate) refresh_saturate_rate(a.spec.app_id);
    }
}

// ============================================================
// Failure handling
// ============================================================

FailImpact Engine::nic_failed(NicId nic) {
    FailImpact impact;
    for (auto& [app_id, a] : apps_) {
        bool touched = false;
        for (auto& g : a.groups) {
            for (auto& r : g.ranges) {
                if (r.nic != nic || !r.alive) continue;
                r.alive = false;
                touched = true;
                for (auto& pool : r.pools) pool.active_servers = 0;
                for (auto& lane : r.lanes) lane.inflight = 0;
            }
        }
        // TO buffers held on the failed NIC die too
        for (auto& [flow, e] : to(nic).table(app_id)) {
            e.migration_buffer.clear();
            e.inflight.clear();
        }
        if (!touched && a.anchor != nic) {
            // still may have packets in transfer toward this NIC
        }
        std::vector<std::uint64_t> dead;
        for (auto& [uid, rec] : a.inflight) {
            bool died = false;
            switch (rec.loc) {
                case InFlightRec::Loc::InLane: {
                    RuntimeRange* r = range_of(a, rec.lane);
                    died = r && r->nic == nic;
                    break;
                }
                case InFlightRec::Loc::InTransfer:
                case InFlightRec::Loc::Buffered:
                    died = rec.nic == nic;
                    break;
            }
            if (died) {
                impact.died[app_id].push_back(rec.ingress_copy);
                dead.push_back(uid);
            }
        }
        for (auto uid : dead) a.inflight.erase(uid);
        // per-flow in-flight counters on dead lanes reset
        for (auto& [to_nic, torch] : tos_) {
            for (auto& [flow, e] : torch.table(app_id)) {
                for (auto it = e.inflight.begin(); it != e.inflight.end();) {
                    RuntimeRange* r = range_of(a, it->first);
                    if (r && r->nic == nic)
                        it = e.inflight.erase(it);
                    else
                        ++it;
                }
                if (e.migrating) maybe_complete_migration(a, e);
            }
        }
    }
    return impact;
}

void Engine::quarantine_nic(NicId nic) {
    for (auto& [app_id, a] : apps_) {
        std::vector<LaneRef> dead_lanes;
        for (auto& g : a.groups) {
            for (size_t ri = 0; ri < g.ranges.size(); ++ri) {
                RuntimeRange& r = g.ranges[ri];
                if (r.nic != nic) continue;
                for (size_t lane = 0; lane < r.lanes.size(); ++lane) {
                    r.lane_dead[lane] = true;
                    dead_lanes.push_back(
                        LaneRef{g.group_id, static_cast<int>(ri), static_cast<int>(lane)});
                }
            }
        }
        for (auto& [to_nic, torch] : tos_)
            for (const auto& ref : dead_lanes) torch.forget_lane(app_id, ref);
    }
}

void Engine::replace_range(const std::string& app_id, int group_id, int range_idx, NicId backup,
                           const std::vector<StageAlloc>& replacement) {
    RuntimeApp& a = app(app_id);
    RuntimeGroup* g = group_of(a, group_id);
    if (!g || range_idx < 0 || static_cast<size_t>(range_idx) >= g->ranges.size())
        throw_error(Errc::UnknownApp, "replace_range: no such range");
    RuntimeRange& r = g->ranges[static_cast<size_t>(range_idx)];

    r.nic = backup;
    r.alive = true;
    r.epoch++;
    int lanes = 1;
    for (const auto& sa : replacement) lanes = std::max(lanes, sa.count);
    r.lanes.clear();
    r.lane_dead.clear();
    for (int lane = 0; lane < lanes; ++lane) {
        LaneRings lr;
        lr.ingress = RingBuffer(RingRole::Ingress, cfg_.ring_capacity);
        lr.inter.assign(static_cast<size_t>(r.len() - 1),
                        RingBuffer(RingRole::InterStage, cfg_.ring_capacity));
        lr.egress = RingBuffer(RingRole::Egress, cfg_.ring_capacity);
        r.lanes.push_back(std::move(lr));
        r.lane_dead.push_back(false);
    }
    r.pools.clear();
    for (int s = r.lo; s <= r.hi; ++s) {
        StagePool pool;
        const StageAlloc* sa = nullptr;
        for (const auto& cand : replacement)
            if (cand.stage == s) sa = &cand;
        if (!sa) throw_error(Errc::GrantMissing, "replacement misses stage " + std::to_string(s));
        resolve_pool_models(a, a.spec.stages[static_cast<size_t>(s)], *sa, pool);
        r.pools.push_back(std::move(pool));
    }

    // keep the placement record in sync for later rescales
    if (GroupPlacement* gp = a.placement.group_by_id(group_id)) {
        gp->ranges[static_cast<size_t>(range_idx)].nic = backup;
        gp->ranges[static_cast<size_t>(range_idx)].lanes = lanes;
        for (const auto& sa : replacement) gp->stages[static_cast<size_t>(sa.stage)] = sa;
    }
    a.anchor = a.placement.anchor_nic();
    if (a.traffic.saturate) refresh_saturate_rate(app_id);
}

void Engine::inject_ingress(const std::string& app_id, std::vector<Packet> packets, SimTime at) {
    schedule(at, EventKind::Control, [this, app_id, packets = std::move(packets)]() mutable {
        auto it = apps_.find(app_id);
        if (it == apps_.end()) return;
        RuntimeApp& a = it->second;
        auto views = ingress_views(a);
        for (auto& pkt : packets) {
            if (a.aggregator.is_delivered(pkt.flow, pkt.flow_seq)) continue;
            pkt.uid = next_uid_++;
            if (views.empty()) {
                drop_packet(a, pkt, "replay_no_pipeline", false);
                continue;
            }
            RouteDecision dec =
                to(a.anchor).route_ingress(app_id, pkt.flow, views, cfg_.high_watermark, now_);
            if (!dec.lane.valid()) {
                drop_packet(a, pkt, "replay_full", false);
                continue;
            }
            for (auto& v : views)
                if (v.ref == dec.lane) v.free_slots = std::max(0, v.free_slots - 1);
            accept_packet(a, std::move(pkt), dec, true);
            a.stats.accepted--;  // replays are not new admissions
        }
    });
}

void Engine::count_loss(const std::string& app_id, const Packet& pkt, const std::string& reason) {
    RuntimeApp& a = app(app_id);
    Packet copy = pkt;
    drop_packet(a, copy, reason, false);
}

std::vector<Packet> Engine::inflight_snapshot(const std::string& app_id) const {
    const RuntimeApp& a = app(app_id);
    std::vector<Packet> out;
    out.reserve(a.inflight.size());
    for (const auto& [uid, rec] : a.inflight) out.push_back(rec.ingress_copy);
    return out;
}

void Engine::teardown_app(const std::string& app_id) {
    RuntimeApp& a = app(app_id);
    a.traffic_on = false;
    a.gen_epoch++;
    std::vector<Packet> leftovers;
    for (auto& [uid, rec] : a.inflight) leftovers.push_back(rec.ingress_copy);
    for (auto& pkt : leftovers) drop_packet(a, pkt, "teardown", false);
    a.groups.clear();
    for (auto& [nic, torch] : tos_) torch.drop_app(app_id);
    // stats survive in the report; runtime is gone
    a.drain_tasks.clear();
}

// ============================================================
// Introspection
// ============================================================

bool Engine::drained(const std::string& app_id) const { return app(app_id).inflight.empty(); }

std::int64_t Engine::reorder_held(const std::string& app_id) const {
    return app(app_id).aggregator.held_count();
}

const AppStats& Engine::app_stats(const std::string& app_id) const { return app(app_id).stats; }
AppStats& Engine::app_stats_mut(const std::string& app_id) { return app(app_id).stats; }

const NicStats& Engine::nic_stats(NicId nic) const {
    auto it = nic_stats_.find(nic);
    if (it == nic_stats_.end()) throw_error(Errc::UnknownNic, std::to_string(nic));
    return it->second;
}

std::vector<StagePoolSummary> Engine::pool_summary(const std::string& app_id) const {
    const RuntimeApp& a = app(app_id);
    std::map<int, StagePoolSummary> agg;
    for (const auto& g : a.groups) {
        for (const auto& r : g.ranges) {
            for (const auto& pool : r.pools) {
                auto& s = agg[pool.stage];
                s.stage = pool.stage;
                s.servers += pool.active_servers;
                s.busy_ns += pool.busy_ns;
                s.served += pool.served;
                s.service_ns += pool.service_ns;
            }
        }
    }
    std::vector<StagePoolSummary> out;
    for (auto& [stage, s] : agg) out.push_back(s);
    return out;
}

int Engine::lane_count(const std::string& app_id) const {
    const RuntimeApp& a = app(app_id);
    int n = 0;
    for (const auto& g : a.groups) {
        if (!g.alive) continue;
        for (size_t lane = 0; lane < (g.ranges.empty() ? 0 : g.ranges.front().lanes.size()); ++lane)
            if (!g.ranges.front().lane_dead[lane] && g.ranges.front().lanes[lane].accepting) n++;
    }
    return n;
}

std::map<std::string, std::int64_t> Engine::ring_peaks(const std::string& app_id) const {
    const RuntimeApp& a = app(app_id);
    std::map<std::string, std::int64_t> out{{"ingress", 0}, {"inter_stage", 0}, {"egress", 0}};
    for (const auto& g : a.groups) {
        for (const auto& r : g.ranges) {
            for (const auto& lane : r.lanes) {
                out["ingress"] = std::max<std::int64_t>(out["ingress"], lane.ingress.peak());
                for (const auto& ring : lane.inter)
                    out["inter_stage"] = std::max<std::int64_t>(out["inter_stage"], ring.peak());
                out["egress"] = std::max<std::int64_t>(out["egress"], lane.egress.peak());
            }
        }
    }
    return out;
}

TrafficOrchestrator& Engine::to(NicId nic) {
    auto it = tos_.find(nic);
    if (it == tos_.end()) it = tos_.emplace(nic, TrafficOrchestrator(nic)).first;
    return it->second;
}

std::vector<std::string> Engine::app_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, a] : apps_) out.push_back(id);
    return out;
}

const Placement* Engine::placement_of(const std::string& app_id) const {
    auto it = apps_.find(app_id);
    return it == apps_.end() ? nullptr : &it->second.placement;
}

}  // namespace nicpool
