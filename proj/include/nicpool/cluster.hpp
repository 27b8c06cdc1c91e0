#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nicpool/app_model.hpp"
#include "nicpool/errors.hpp"
#include "nicpool/resource_kind.hpp"
#include "nicpool/sim_time.hpp"

namespace nicpool {

using NicId = int;       // index in config order; also the tie-break order
using GrantId = std::int64_t;

struct AcceleratorUnit {
    AcceleratorKind kind = AcceleratorKind::Regex;
    double capacity_gbps = 0.0;
    ServiceModel perf_metric;                  // per-op latency model
    std::optional<std::string> allocated_to;   // app_id; at most one at a time
    int unit_id = 0;                           // per-NIC index
};

struct NicDescriptor {
    NicId nic_id = 0;
    std::string name;
    std::string model;
    int total_cores = 0;
    int reserved_to_cores = 1;  // pinned to the traffic orchestrator
    int memory_gb = 0;
    std::vector<AcceleratorUnit> accelerators;
    double port_bw_gbps = 100.0;

    int allocated_units = 0;
    bool failed = false;
    bool reserved_backup = false;  // failover spare; skipped by normal placement

    // One resource unit = 1 core + 4 GB memory.
    int unit_capacity() const {
        int by_cores = total_cores - reserved_to_cores;
        int by_mem = memory_gb / 4;
        return std::max(0, std::min(by_cores, by_mem));
    }
    int free_units() const { return unit_capacity() - allocated_units; }

    int accel_count(AcceleratorKind k) const;
    int free_accel(AcceleratorKind k) const;
    std::set<AcceleratorKind> accel_kinds() const;
};

struct ResourceVector {
    int cpu_units = 0;
    std::map<AcceleratorKind, int> accel;

    static ResourceVector cpu(int n) { return ResourceVector{n, {}}; }
    static ResourceVector accelerator(AcceleratorKind k, int n) { return ResourceVector{0, {{k, n}}}; }

    bool is_zero() const;
    void check_non_negative() const;
    ResourceVector& operator+=(const ResourceVector& o);
    ResourceVector& operator-=(const ResourceVector& o);  // throws NegativeResource
    friend ResourceVector operator+(ResourceVector a, const ResourceVector& b) { return a += b; }
    bool operator==(const ResourceVector&) const = default;
    std::string str() const;
};

struct RackNetwork {
    double default_rtt_us = 4.52;
    std::map<std::pair<NicId, NicId>, double> rtt_us;  // symmetric overrides

    double rtt(NicId a, NicId b) const {
        if (a == b) return 0.0;
        auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        auto it = rtt_us.find(key);
        return it != rtt_us.end() ? it->second : default_rtt_us;
    }
    SimTime rtt_time(NicId a, NicId b) const { return us_to_time(rtt(a, b)); }
    SimTime one_way(NicId a, NicId b) const { return rtt_time(a, b) / 2; }
};

struct Grant {
    GrantId id = 0;
    std::string app_id;
    NicId nic_id = 0;
    ResourceVector rv;
    std::vector<int> accel_unit_ids;
    bool reclaimed = false;
};

struct AccelUnitConfig {
    AcceleratorKind kind = AcceleratorKind::Regex;
    double capacity_gbps = 10.0;
    double fixed_us = 1.0;
    double per_byte_us = 0.0;
    int count = 1;
};

struct NicConfig {
    std::string name;
    std::string model = "generic";
    int total_cores = 8;
    int reserved_to_cores = 1;
    int memory_gb = 32;
    std::vector<AccelUnitConfig> accelerators;
    double port_bw_gbps = 100.0;
    bool reserved_backup = false;
};

struct ClusterConfig {
    std::vector<NicConfig> nics;
    double default_rtt_us = 4.52;
    std::vector<std::tuple<std::string, std::string, double>> rtt_overrides_us;
};

class Cluster {
public:
    static Cluster build(const ClusterConfig& cfg);  // deterministic nic ordering by config order

    const std::vector<NicDescriptor>& nics() const { return nics_; }
    NicDescriptor& nic(NicId id);
    const NicDescriptor& nic(NicId id) const;
    std::optional<NicId> nic_by_name(const std::string& name) const;
    const RackNetwork& network() const { return net_; }
    RackNetwork& network() { return net_; }

    // Decreases the NIC's free pool; accelerator units are picked best
    // perf_metric first (lowest fixed_us, then per_byte_us, then unit id).
    GrantId allocate(NicId nic_id, const ResourceVector& req, const std::string& app_id);
    void reclaim(GrantId id);
    const Grant& grant(GrantId id) const;
    std::vector<GrantId> grants_of(const std::string& app_id) const;
    std::vector<GrantId> live_grants_on(NicId nic_id) const;

    // Max free CPU units among NICs satisfying the accelerator dimensions of
    // `need`; ties to the lowest nic_id. Falls back to max-free-CPU when no
    // NIC satisfies the accelerators.
    NicId most_resourceful(const ResourceVector& need) const;

    bool can_fit(NicId nic_id, const ResourceVector& req) const;

    void mark_failed(NicId id, bool failed);

    ResourceVector total_of(NicId id) const;
    ResourceVector free_of(NicId id) const;
    ResourceVector granted_of(NicId id) const;

private:
    std::vector<NicDescriptor> nics_;
    RackNetwork net_;
    std::map<GrantId, Grant> grants_;
    GrantId next_grant_ = 1;
};

}  // namespace nicpool
