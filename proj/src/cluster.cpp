#include "nicpool/cluster.hpp"

#include <algorithm>
#include <sstream>

namespace nicpool {

int NicDescriptor::accel_count(AcceleratorKind k) const {
    int n = 0;
    for (const auto& u : accelerators) n += (u.kind == k) ? 1 : 0;
    return n;
}

int NicDescriptor::free_accel(AcceleratorKind k) const {
    int n = 0;
    for (const auto& u : accelerators) n += (u.kind == k && !u.allocated_to) ? 1 : 0;
    return n;
}

std::set<AcceleratorKind> NicDescriptor::accel_kinds() const {
    std::set<AcceleratorKind> out;
    for (const auto& u : accelerators) out.insert(u.kind);
    return out;
}

bool ResourceVector::is_zero() const {
    if (cpu_units != 0) return false;
    for (auto& [k, n] : accel)
        if (n != 0) return false;
    return true;
}

void ResourceVector::check_non_negative() const {
    if (cpu_units < 0) throw_error(Errc::NegativeResource, "cpu_units");
    for (auto& [k, n] : accel)
        if (n < 0) throw_error(Errc::NegativeResource, accelerator_name(k));
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& o) {
    cpu_units += o.cpu_units;
    for (auto& [k, n] : o.accel) accel[k] += n;
    return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& o) {
    cpu_units -= o.cpu_units;
    for (auto& [k, n] : o.accel) accel[k] -= n;
    check_non_negative();
    return *this;
}

std::string ResourceVector::str() const {
    std::ostringstream os;
    os << "{cpu:" << cpu_units;
    for (auto& [k, n] : accel)
        if (n != 0) os << ' ' << accelerator_name(k) << ':' << n;
    os << '}';
    return os.str();
}

Cluster Cluster::build(const ClusterConfig& cfg) {
    if (cfg.nics.empty()) throw_error(Errc::EmptyCluster, "no NICs configured");
    Cluster c;
    for (size_t i = 0; i < cfg.nics.size(); ++i) {
        const auto& nc = cfg.nics[i];
        if (nc.total_cores < 0 || nc.memory_gb < 0 || nc.reserved_to_cores < 0)
            throw_error(Errc::NegativeResource, "nic '" + nc.name + "'");
        NicDescriptor nd;
        nd.nic_id = static_cast<NicId>(i);
        nd.name = nc.name.empty() ? "nic" + std::to_string(i) : nc.name;
        nd.model = nc.model;
        nd.total_cores = nc.total_cores;
        nd.reserved_to_cores = nc.reserved_to_cores;
        nd.memory_gb = nc.memory_gb;
        nd.port_bw_gbps = nc.port_bw_gbps;
        nd.reserved_backup = nc.reserved_backup;
        int uid = 0;
        for (const auto& ac : cfg.nics[i].accelerators) {
            if (ac.count < 0) throw_error(Errc::NegativeResource, "accelerator count");
            for (int j = 0; j < ac.count; ++j) {
                AcceleratorUnit u;
                u.kind = ac.kind;
                u.capacity_gbps = ac.capacity_gbps;
                u.perf_metric = ServiceModel{ac.fixed_us, ac.per_byte_us};
                u.unit_id = uid++;
                nd.accelerators.push_back(u);
            }
        }
        c.nics_.push_back(std::move(nd));
    }
    c.net_.default_rtt_us = cfg.default_rtt_us;
    for (const auto& [a, b, us] : cfg.rtt_overrides_us) {
        auto ia = c.nic_by_name(a);
        auto ib = c.nic_by_name(b);
        if (!ia || !ib) throw_error(Errc::UnknownNic, "rtt override " + a + "<->" + b);
        auto key = *ia < *ib ? std::make_pair(*ia, *ib) : std::make_pair(*ib, *ia);
        c.net_.rtt_us[key] = us;
    }
    return c;
}

NicDescriptor& Cluster::nic(NicId id) {
    if (id < 0 || static_cast<size_t>(id) >= nics_.size())
        throw_error(Errc::UnknownNic, "nic " + std::to_string(id));
    return nics_[static_cast<size_t>(id)];
}

const NicDescriptor& Cluster::nic(NicId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nics_.size())
        throw_error(Errc::UnknownNic, "nic " + std::to_string(id));
    return nics_[static_cast<size_t>(id)];
}

std::optional<NicId> Cluster::nic_by_name(const std::string& name) const {
    for (const auto& n : nics_)
        if (n.name == name) return n.nic_id;
    return std::nullopt;
}

bool Cluster::can_fit(NicId nic_id, const ResourceVector& req) const {
    const auto& n = nic(nic_id);
    if (n.failed) return false;
    if (n.free_units() < req.cpu_units) return false;
    for (auto& [k, cnt] : req.accel)
        if (n.free_accel(k) < cnt) return false;
    return true;
}

GrantId Cluster::allocate(NicId nic_id, const ResourceVector& req, const std::string& app_id) {
    req.check_non_negative();
    auto& n = nic(nic_id);
    if (n.failed) throw_error(Errc::UnknownNic, n.name + " is failed");
    if (n.free_units() < req.cpu_units)
        throw_error(Errc::Insufficient, "cpu on " + n.name + " (" + std::to_string(n.free_units()) +
                                            " free, " + std::to_string(req.cpu_units) + " requested)");
    for (auto& [k, cnt] : req.accel)
        if (n.free_accel(k) < cnt)
            throw_error(Errc::Insufficient, std::string(accelerator_name(k)) + " on " + n.name);

    Grant g;
    g.id = next_grant_++;
    g.app_id = app_id;
    g.nic_id = nic_id;
    g.rv = req;
    n.allocated_units += req.cpu_units;
    for (auto& [k, cnt] : req.accel) {
        // free units of this kind, best perf first
        std::vector<int> candidates;
        for (const auto& u : n.accelerators)
            if (u.kind == k && !u.allocated_to) candidates.push_back(u.unit_id);
        std::sort(candidates.begin(), candidates.end(), [&n](int a, int b) {
            const auto& ua = n.accelerators[static_cast<size_t>(a)];
            const auto& ub = n.accelerators[static_cast<size_t>(b)];
            if (ua.perf_metric.fixed_us != ub.perf_metric.fixed_us)
                return ua.perf_metric.fixed_us < ub.perf_metric.fixed_us;
            if (ua.perf_metric.per_byte_us != ub.perf_metric.per_byte_us)
                return ua.perf_metric.per_byte_us < ub.perf_metric.per_byte_us;
            return a < b;
        });
        for (int j = 0; j < cnt; ++j) {
            int uid = candidates[static_cast<size_t>(j)];
            n.accelerators[static_cast<size_t>(uid)].allocated_to = app_id;
            g.accel_unit_ids.push_back(uid);
        }
    }
    GrantId id = g.id;
    grants_.emplace(id, std::move(g));
    return id;
}

void Cluster::reclaim(GrantId id) {
    auto it = grants_.find(id);
    if (it == grants_.end()) throw_error(Errc::GrantMissing, "grant " + std::to_string(id));
    Grant& g = it->second;
    if (g.reclaimed) throw_error(Errc::DoubleReclaim, "grant " + std::to_string(id));
    auto& n = nic(g.nic_id);
    n.allocated_units -= g.rv.cpu_units;
    for (int uid : g.accel_unit_ids) n.accelerators[static_cast<size_t>(uid)].allocated_to.reset();
    g.reclaimed = true;
}

const Grant& Cluster::grant(GrantId id) const {
    auto it = grants_.find(id);
    if (it == grants_.end()) throw_error(Errc::GrantMissing, "grant " + std::to_string(id));
    return it->second;
}

std::vector<GrantId> Cluster::grants_of(const std::string& app_id) const {
    std::vector<GrantId> out;
    for (const auto& [id, g] : grants_)
        if (g.app_id == app_id && !g.reclaimed) out.push_back(id);
    return out;
}

std::vector<GrantId> Cluster::live_grants_on(NicId nic_id) const {
    std::vector<GrantId> out;
    for (const auto& [id, g] : grants_)
        if (g.nic_id == nic_id && !g.reclaimed) out.push_back(id);
    return out;
}

NicId Cluster::most_resourceful(const ResourceVector& need) const {
    if (nics_.empty()) throw_error(Errc::EmptyCluster, "most_resourceful");
    NicId best = -1, best_any = -1;
    int best_free = -1, best_any_free = -1;
    for (const auto& n : nics_) {
        if (n.failed || n.reserved_backup) continue;
        int free = n.free_units();
        if (free > best_any_free) {
            best_any_free = free;
            best_any = n.nic_id;
        }
        bool accel_ok = true;
        for (auto& [k, cnt] : need.accel)
            if (n.free_accel(k) < cnt) accel_ok = false;
        if (accel_ok && free > best_free) {
            best_free = free;
            best = n.nic_id;
        }
    }
    if (best >= 0) return best;
    if (best_any >= 0) return best_any;  // caller handles accelerators separately
    throw_error(Errc::EmptyCluster, "all NICs failed");
}

void Cluster::mark_failed(NicId id, bool failed) { nic(id).failed = failed; }

ResourceVector Cluster::total_of(NicId id) const {
    const auto& n = nic(id);
    ResourceVector rv;
    rv.cpu_units = n.unit_capacity();
    for (const auto& u : n.accelerators) rv.accel[u.kind] += 1;
    return rv;
}

ResourceVector Cluster::free_of(NicId id) const {
    const auto& n = nic(id);
    ResourceVector rv;
    rv.cpu_units = n.free_units();
    for (const auto& u : n.accelerators) rv.accel[u.kind] += u.allocated_to ? 0 : 1;
    return rv;
}

ResourceVector Cluster::granted_of(NicId id) const {
    ResourceVector rv;
    for (const auto& [gid, g] : grants_) {
        if (g.nic_id != id || g.reclaimed) continue;
        rv += g.rv;
    }
    return rv;
}

}  // namespace nicpool
