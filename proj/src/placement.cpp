#include "nicpool/placement.hpp"

#include <algorithm>
#include <numeric>

namespace nicpool {

std::vector<NicId> GroupPlacement::nic_chain() const {
    std::vector<NicId> out;
    for (const auto& r : ranges) out.push_back(r.nic);
    return out;
}

void GroupPlacement::recompute_lanes() {
    for (auto& r : ranges) {
        int m = 1;
        for (int s = r.lo; s <= r.hi; ++s) m = std::max(m, stages[static_cast<size_t>(s)].count);
        r.lanes = m;
    }
}

std::vector<long> Placement::per_stage_totals(size_t n_stages) const {
    std::vector<long> totals(n_stages, 0);
    for (const auto& g : groups)
        for (const auto& sa : g.stages) totals[static_cast<size_t>(sa.stage)] += sa.count;
    return totals;
}

bool Placement::touches(NicId nic) const {
    for (const auto& g : groups)
        for (const auto& r : g.ranges)
            if (r.nic == nic) return true;
    return false;
}

GroupPlacement* Placement::group_by_id(int id) {
    for (auto& g : groups)
        if (g.group_id == id) return &g;
    return nullptr;
}

static ResourceVector stage_need(const StageSpec& st, int count) {
    return st.resource_class.is_cpu ? ResourceVector::cpu(count)
                                    : ResourceVector::accelerator(st.resource_class.accel, count);
}

// NICs owning the kind with enough free units, best perf metric first.
static std::optional<NicId> pick_accel_nic(const Cluster& cluster, AcceleratorKind kind, int count) {
    std::optional<NicId> best;
    double best_fixed = 0, best_per_byte = 0;
    for (const auto& n : cluster.nics()) {
        if (n.failed || n.reserved_backup || n.free_accel(kind) < count) continue;
        double fixed = 1e300, per_byte = 1e300;
        for (const auto& u : n.accelerators) {
            if (u.kind != kind || u.allocated_to) continue;
            if (u.perf_metric.fixed_us < fixed ||
                (u.perf_metric.fixed_us == fixed && u.perf_metric.per_byte_us < per_byte)) {
                fixed = u.perf_metric.fixed_us;
                per_byte = u.perf_metric.per_byte_us;
            }
        }
        if (!best || fixed < best_fixed || (fixed == best_fixed && per_byte < best_per_byte)) {
            best = n.nic_id;
            best_fixed = fixed;
            best_per_byte = per_byte;
        }
    }
    return best;
}

static std::optional<NicId> pick_cpu_nic(const Cluster& cluster, int count) {
    NicId id = cluster.most_resourceful(ResourceVector::cpu(count));
    if (cluster.nic(id).free_units() < count) return std::nullopt;
    return id;
}

// Places `counts` as one group, walking the chain and spilling at capacity.
// Allocates real grants; rolls everything back on failure.
static std::optional<GroupPlacement> attempt_group(const AppSpec& app,
                                                   const std::vector<int>& counts, Cluster& cluster,
                                                   bool single_nic) {
    const size_t n = app.stages.size();
    GroupPlacement group;
    std::vector<GrantId> taken;
    auto rollback = [&]() {
        for (auto it = taken.rbegin(); it != taken.rend(); ++it) cluster.reclaim(*it);
    };

    if (single_nic) {
        ResourceVector total;
        for (size_t i = 0; i < n; ++i) total += stage_need(app.stages[i], counts[i]);
        std::optional<NicId> chosen;
        int best_free = -1;
        for (const auto& nd : cluster.nics()) {
            if (nd.reserved_backup || !cluster.can_fit(nd.nic_id, total)) continue;
            if (nd.free_units() > best_free) {
                best_free = nd.free_units();
                chosen = nd.nic_id;
            }
        }
        if (!chosen) return std::nullopt;
        for (size_t i = 0; i < n; ++i) {
            StageAlloc sa{static_cast<int>(i), *chosen, counts[i], {}};
            for (int j = 0; j < counts[i]; ++j) {
                GrantId g = cluster.allocate(*chosen, stage_need(app.stages[i], 1), app.app_id);
                sa.grants.push_back(g);
                taken.push_back(g);
            }
            group.stages.push_back(std::move(sa));
        }
        group.ranges.push_back(RangeInfo{*chosen, 0, static_cast<int>(n) - 1, 1});
        group.recompute_lanes();
        return group;
    }

    NicId cur = -1;
    for (size_t i = 0; i < n; ++i) {
        const StageSpec& st = app.stages[i];
        ResourceVector need = stage_need(st, counts[i]);
        NicId nic = -1;
        if (cur >= 0 && cluster.can_fit(cur, need)) {
            nic = cur;
        } else {
            std::optional<NicId> next =
                st.resource_class.is_cpu ? pick_cpu_nic(cluster, counts[i])
                                         : pick_accel_nic(cluster, st.resource_class.accel, counts[i]);
            if (!next) {
                rollback();
                return std::nullopt;
            }
            nic = *next;
        }
        StageAlloc sa{static_cast<int>(i), nic, counts[i], {}};
        for (int j = 0; j < counts[i]; ++j) {
            GrantId g = cluster.allocate(nic, stage_need(st, 1), app.app_id);
            sa.grants.push_back(g);
            taken.push_back(g);
        }
        group.stages.push_back(std::move(sa));
        cur = nic;
    }

    // ranges follow the NIC switches
    int lo = 0;
    for (size_t i = 1; i <= n; ++i) {
        if (i == n || group.stages[i].nic != group.stages[i - 1].nic) {
            group.ranges.push_back(
                RangeInfo{group.stages[static_cast<size_t>(lo)].nic, lo, static_cast<int>(i) - 1, 1});
            lo = static_cast<int>(i);
        }
    }
    group.recompute_lanes();
    return group;
}

// Copies in placement order: full R-copies first, then minimal copies.
static std::vector<std::vector<int>> copy_vectors(const AllocationPlan& alloc,
                                                  const std::vector<long>& replicas, size_t n_stages) {
    std::vector<std::vector<int>> copies;
    for (long c = 0; c < alloc.full_copies; ++c) {
        std::vector<int> v(n_stages, 1);
        for (size_t i = 0; i < n_stages; ++i) v[i] = static_cast<int>(replicas[i]);
        copies.push_back(std::move(v));
    }
    for (long r = 0; r < alloc.remainder_units; ++r) copies.emplace_back(n_stages, 1);
    return copies;
}

// R recovered from totals: total_i = R_i * fc + ru.
static std::vector<long> replicas_from_alloc(const AllocationPlan& alloc, size_t n) {
    std::vector<long> r(n, 1);
    if (alloc.full_copies > 0)
        for (size_t i = 0; i < n; ++i)
            r[i] = (alloc.per_stage_total[i] - alloc.remainder_units) / alloc.full_copies;
    return r;
}

static void merge_identical_groups(std::vector<GroupPlacement>& groups) {
    std::vector<GroupPlacement> merged;
    for (auto& g : groups) {
        bool absorbed = false;
        for (auto& m : merged) {
            if (m.nic_chain() != g.nic_chain()) continue;
            bool same_bounds = m.ranges.size() == g.ranges.size();
            for (size_t r = 0; same_bounds && r < m.ranges.size(); ++r)
                same_bounds = m.ranges[r].lo == g.ranges[r].lo && m.ranges[r].hi == g.ranges[r].hi;
            if (!same_bounds) continue;
            for (size_t i = 0; i < m.stages.size(); ++i) {
                m.stages[i].count += g.stages[i].count;
                m.stages[i].grants.insert(m.stages[i].grants.end(), g.stages[i].grants.begin(),
                                          g.stages[i].grants.end());
            }
            m.recompute_lanes();
            absorbed = true;
            break;
        }
        if (!absorbed) merged.push_back(std::move(g));
    }
    groups = std::move(merged);
}

static Placement place_whole_nic(const AppSpec& app, const AllocationPlan& alloc, Cluster& cluster) {
    // Monolithic baseline: the app owns entire NICs; no sharing, no splitting.
    ResourceVector total;
    std::vector<int> counts;
    for (size_t i = 0; i < app.stages.size(); ++i) {
        counts.push_back(static_cast<int>(alloc.per_stage_total[i]));
        total += stage_need(app.stages[i], counts.back());
    }
    for (const auto& nd : cluster.nics()) {
        if (nd.failed || nd.reserved_backup || !cluster.live_grants_on(nd.nic_id).empty()) continue;
        if (!cluster.can_fit(nd.nic_id, total)) continue;
        Placement p;
        p.app_id = app.app_id;
        GroupPlacement group;
        group.group_id = p.next_group_id++;
        for (size_t i = 0; i < app.stages.size(); ++i) {
            StageAlloc sa{static_cast<int>(i), nd.nic_id, counts[i], {}};
            for (int j = 0; j < counts[i]; ++j)
                sa.grants.push_back(cluster.allocate(nd.nic_id, stage_need(app.stages[i], 1), app.app_id));
            group.stages.push_back(std::move(sa));
        }
        group.ranges.push_back(RangeInfo{nd.nic_id, 0, static_cast<int>(app.stages.size()) - 1, 1});
        group.recompute_lanes();
        // claim the leftovers so nothing multiplexes onto this NIC
        ResourceVector leftover = cluster.free_of(nd.nic_id);
        if (!leftover.is_zero()) {
            GrantId g = cluster.allocate(nd.nic_id, leftover, app.app_id);
            group.stages.front().grants.push_back(g);
        }
        p.groups.push_back(std::move(group));
        return p;
    }
    throw_error(Errc::NothingPlaceable, app.app_id + " (whole-NIC mode)");
}

Placement place(const AppSpec& app, const AllocationPlan& alloc, Cluster& cluster,
                const PerfTarget& target, PlacementMode mode) {
    if (alloc.per_stage_total.size() != app.stages.size())
        throw_error(Errc::EmptyInput, "allocation does not match app stages");
    if (mode == PlacementMode::WholeNic) return place_whole_nic(app, alloc, cluster);

    Placement p;
    p.app_id = app.app_id;
    p.latency_sensitive = target.latency_sensitive;

    auto replicas = replicas_from_alloc(alloc, app.stages.size());
    auto copies = copy_vectors(alloc, replicas, app.stages.size());
    if (copies.empty()) copies.emplace_back(app.stages.size(), 1);

    if (target.latency_sensitive) {
        // all replicas on a single NIC, shedding copies until something fits
        for (size_t k = copies.size(); k >= 1; --k) {
            std::vector<int> counts(app.stages.size(), 0);
            for (size_t c = 0; c < k; ++c)
                for (size_t i = 0; i < counts.size(); ++i) counts[i] += copies[c][i];
            auto group = attempt_group(app, counts, cluster, /*single_nic=*/true);
            if (group) {
                group->group_id = p.next_group_id++;
                p.groups.push_back(std::move(*group));
                p.best_effort = k < copies.size();
                return p;
            }
        }
        throw_error(Errc::NothingPlaceable, app.app_id + " (latency-sensitive)");
    }

    // Fast path: the whole demand as one pooled group.
    std::vector<int> totals(app.stages.size());
    for (size_t i = 0; i < totals.size(); ++i) totals[i] = static_cast<int>(alloc.per_stage_total[i]);
    if (auto group = attempt_group(app, totals, cluster, false)) {
        group->group_id = p.next_group_id++;
        p.groups.push_back(std::move(*group));
        return p;
    }

    // Copy-by-copy, keeping the largest feasible prefix.
    size_t placed = 0;
    for (const auto& c : copies) {
        auto group = attempt_group(app, c, cluster, false);
        if (!group) break;
        p.groups.push_back(std::move(*group));
        ++placed;
    }
    if (placed == 0) throw_error(Errc::NothingPlaceable, app.app_id);
    p.best_effort = placed < copies.size();
    merge_identical_groups(p.groups);
    for (auto& g : p.groups) g.group_id = p.next_group_id++;
    return p;
}

PlacementDelta rescale(const AppSpec& app, Placement& current, const AllocationPlan& new_alloc,
                       Cluster& cluster, const PerfTarget& new_target) {
    PlacementDelta delta;
    const size_t n = app.stages.size();
    auto cur_totals = current.per_stage_totals(n);

    std::vector<int> grow(n, 0), shrink(n, 0);
    bool any_grow = false, any_shrink = false;
    for (size_t i = 0; i < n; ++i) {
        long d = new_alloc.per_stage_total[i] - cur_totals[i];
        if (d > 0) {
            grow[i] = static_cast<int>(d);
            any_grow = true;
        } else if (d < 0) {
            shrink[i] = static_cast<int>(-d);
            any_shrink = true;
        }
    }

    if (any_grow) {
        // Prefer growing the anchor group's pools in place.
        bool in_place = !current.groups.empty();
        std::vector<GrantId> taken;
        GroupGrow gg;
        if (in_place) {
            auto& g0 = current.groups.front();
            gg.group_id = g0.group_id;
            for (size_t i = 0; i < n && in_place; ++i) {
                StageAlloc add{static_cast<int>(i), g0.stages[i].nic, grow[i], {}};
                for (int j = 0; j < grow[i]; ++j) {
                    if (!cluster.can_fit(add.nic, stage_need(app.stages[i], 1))) {
                        in_place = false;
                        break;
                    }
                    GrantId gid = cluster.allocate(add.nic, stage_need(app.stages[i], 1), app.app_id);
                    add.grants.push_back(gid);
                    taken.push_back(gid);
                }
                if (in_place) gg.added.push_back(std::move(add));
            }
        }
        if (in_place) {
            auto& g0 = current.groups.front();
            for (auto& add : gg.added) {
                auto& sa = g0.stages[static_cast<size_t>(add.stage)];
                sa.count += add.count;
                sa.grants.insert(sa.grants.end(), add.grants.begin(), add.grants.end());
            }
            g0.recompute_lanes();
            for (const auto& r : g0.ranges) gg.new_lanes.push_back(r.lanes);
            delta.grows.push_back(std::move(gg));
        } else {
            for (auto it = taken.rbegin(); it != taken.rend(); ++it) cluster.reclaim(*it);
            // Place the growth as fresh groups, degrading copy-by-copy:
            // whole delta, else R-copy chunks, else minimal copies.
            auto replicas = replicas_from_alloc(new_alloc, n);
            std::vector<int> rcopy(n, 1), one(n, 1);
            for (size_t i = 0; i < n; ++i) rcopy[i] = static_cast<int>(replicas[i]);
            std::vector<int> remaining = grow;
            auto fits_chunk = [&](const std::vector<int>& chunk) {
                for (size_t i = 0; i < n; ++i)
                    if (chunk[i] > remaining[i]) return false;
                return true;
            };
            if (auto group = attempt_group(app, remaining, cluster, new_target.latency_sensitive)) {
                group->group_id = current.next_group_id++;
                delta.add_groups.push_back(*group);
                current.groups.push_back(std::move(*group));
                remaining.assign(n, 0);
            } else {
                while (true) {
                    const std::vector<int>* chunk = nullptr;
                    if (fits_chunk(rcopy))
                        chunk = &rcopy;
                    else if (fits_chunk(one))
                        chunk = &one;
                    else
                        break;
                    auto group = attempt_group(app, *chunk, cluster, new_target.latency_sensitive);
                    if (!group) break;
                    group->group_id = current.next_group_id++;
                    delta.add_groups.push_back(*group);
                    current.groups.push_back(std::move(*group));
                    for (size_t i = 0; i < n; ++i) remaining[i] -= (*chunk)[i];
                }
            }
            delta.best_effort = std::accumulate(remaining.begin(), remaining.end(), 0) > 0;
        }
    }

    if (any_shrink) {
        // Drain remote groups first; the anchor group goes last and never
        // below one replica per stage.
        std::vector<int> remaining = shrink;
        std::vector<int> removed_ids;
        for (size_t gi = current.groups.size(); gi-- > 0;) {
            bool is_anchor = gi == 0;
            auto& g = current.groups[gi];
            bool anything_left =
                std::any_of(remaining.begin(), remaining.end(), [](int v) { return v > 0; });
            if (!anything_left) break;

            bool full_remove = !is_anchor;
            for (size_t i = 0; i < n && full_remove; ++i)
                if (g.stages[i].count > remaining[i]) full_remove = false;

            GroupShrink gs;
            gs.group_id = g.group_id;
            gs.remove_per_stage.assign(n, 0);
            if (full_remove) {
                gs.remove_group = true;
                for (size_t i = 0; i < n; ++i) {
                    gs.remove_per_stage[i] = g.stages[i].count;
                    remaining[i] -= g.stages[i].count;
                    for (GrantId gid : g.stages[i].grants) gs.reclaim_after_drain.push_back(gid);
                }
                gs.new_lanes.assign(g.ranges.size(), 0);
                removed_ids.push_back(g.group_id);
            } else {
                bool any = false;
                for (size_t i = 0; i < n; ++i) {
                    int take = std::min(remaining[i], g.stages[i].count - 1);
                    if (take <= 0) continue;
                    gs.remove_per_stage[i] = take;
                    remaining[i] -= take;
                    any = true;
                    auto& grants = g.stages[i].grants;
                    for (int j = 0; j < take; ++j) {
                        gs.reclaim_after_drain.push_back(grants.back());
                        grants.pop_back();
                    }
                    g.stages[i].count -= take;
                }
                if (!any) continue;
                g.recompute_lanes();
                for (const auto& r : g.ranges) gs.new_lanes.push_back(r.lanes);
            }
            delta.shrinks.push_back(std::move(gs));
        }
        std::erase_if(current.groups, [&](const GroupPlacement& g) {
            return std::find(removed_ids.begin(), removed_ids.end(), g.group_id) != removed_ids.end();
        });
    }
    return delta;
}

}  // namespace nicpool
