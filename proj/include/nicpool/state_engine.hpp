#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nicpool/app_model.hpp"
#include "nicpool/cluster.hpp"
#include "nicpool/sim_time.hpp"

namespace nicpool {

constexpr size_t kStateEntryBytes = 64;
constexpr size_t kStateNameBytes = 24;
constexpr size_t kStateBuckets = 4096;

// 64-byte record: 24B name, 8B hash key, 8B region handle, 8B value length,
// 8B last-used time, 8B pad.
struct StateEntry {
    std::array<char, kStateNameBytes> s_name{};
    std::uint64_t h_key = 0;
    std::uint64_t s_addr = 0;
    std::uint64_t s_len = 0;
    std::int64_t lu_time = 0;
    std::uint64_t pad = 0;

    // conflict resolution bookkeeping, not part of the wire layout
    SimTime write_stamp = 0;
    NicId writer = -1;

    std::string name() const;
    void set_name(const std::string& n);
    std::array<std::uint8_t, kStateEntryBytes> serialize() const;
};

// Linked hash table: 4096 buckets, chains in insertion order, values in a
// per-table memory region addressed by s_addr.
class StateTable {
public:
    StateTable() : buckets_(kStateBuckets) {}

    bool contains(const std::string& name) const;
    StateEntry* find(const std::string& name);
    const StateEntry* find(const std::string& name) const;

    void add(const std::string& name, std::span<const std::uint8_t> value, SimTime lu_time,
             SimTime stamp, NicId writer);
    void set(const std::string& name, std::span<const std::uint8_t> value, SimTime lu_time,
             SimTime stamp, NicId writer);
    void remove(const std::string& name);
    std::optional<std::vector<std::uint8_t>> get(const std::string& name, SimTime now);

    // entries in bucket order then chain order
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> entries() const;
    std::vector<const StateEntry*> entry_records() const;
    std::vector<std::uint8_t> serialize() const;

    size_t evict_expired(SimTime now, SimTime threshold);
    size_t size() const { return count_; }
    std::int64_t bytes() const;

    const std::vector<std::uint8_t>& value_of(const StateEntry& e) const;

    // names touched by add/set/remove since the marker was cleared
    std::set<std::string>& dirty() { return dirty_; }

private:
    static size_t bucket_of(std::uint64_t h_key) { return h_key % kStateBuckets; }
    std::vector<std::vector<StateEntry>> buckets_;
    std::map<std::uint64_t, std::vector<std::uint8_t>> region_;
    std::uint64_t next_addr_ = 1;
    size_t count_ = 0;
    std::set<std::string> dirty_;
};

// Reducers run distributed COMPUTE; accumulators travel as bytes.
struct Reducer {
    std::function<std::vector<std::uint8_t>()> init;
    std::function<void(std::vector<std::uint8_t>&, const std::string&, std::span<const std::uint8_t>)>
        step;
    std::function<void(std::vector<std::uint8_t>&, std::span<const std::uint8_t>)> merge;
};

struct StateFabricConfig {
    size_t max_value_bytes = 4096;
    double lifespan_sec = 500.0;  // eviction threshold
};

struct StateOpCounters {
    std::int64_t write_messages = 0;
    std::int64_t read_messages = 0;
    std::int64_t bulk_reads = 0;
    std::int64_t compute_messages = 0;
};

// One engine per NIC, coordinated over modeled one-sided read/write
// transport. Single-threaded by design; every op returns its link cost.
class StateFabric {
public:
    StateFabric(const Cluster* cluster, StateFabricConfig cfg = {});

    void register_app(const std::string& app_id, AccessPattern pattern, std::vector<NicId> replicas);
    void set_replicas(const std::string& app_id, std::vector<NicId> replicas);
    std::vector<NicId> replicas(const std::string& app_id) const;
    bool has_app(const std::string& app_id) const;

    void register_reducer(const std::string& name, Reducer r);
    bool is_reducer(const std::string& name) const { return reducers_.count(name) > 0; }

    SimTime add(NicId caller, const std::string& app, const std::string& name,
                std::span<const std::uint8_t> value, SimTime now);
    SimTime set(NicId caller, const std::string& app, const std::string& name,
                std::span<const std::uint8_t> value, SimTime now);
    SimTime remove(NicId caller, const std::string& app, const std::string& name, SimTime now);
    std::pair<std::optional<std::vector<std::uint8_t>>, SimTime> get(NicId caller,
                                                                     const std::string& app,
                                                                     const std::string& name,
                                                                     SimTime now);
    std::pair<std::vector<std::pair<std::string, std::vector<std::uint8_t>>>, SimTime> traverse(
        NicId caller, const std::string& app, SimTime now);
    std::pair<std::vector<std::uint8_t>, SimTime> compute(NicId caller, const std::string& app,
                                                          const std::string& reducer, SimTime now);

    size_t evict_expired(SimTime now);

    StateTable& table(NicId nic, const std::string& app);
    const StateTable* table_if(NicId nic, const std::string& app) const;

    // failover support: copy dirty entries of `nic` onto the backup snapshot
    struct TableSnapshot {
        std::vector<std::pair<std::string, std::vector<std::uint8_t>>> entries;  // with lu_times
        std::vector<SimTime> lu_times;
        std::int64_t bytes = 0;
    };
    TableSnapshot snapshot(NicId nic, const std::string& app) const;
    std::int64_t sync_dirty_to(NicId src, const std::string& app, TableSnapshot& backup);
    void restore(NicId nic, const std::string& app, const TableSnapshot& snap, SimTime now);
    void drop_tables_on(NicId nic);

    // copies entries named with `prefix` from src to dst; returns bytes moved
    std::int64_t migrate_entries(NicId src, NicId dst, const std::string& app,
                                 const std::string& prefix, SimTime now);

    const StateOpCounters& counters() const { return counters_; }
    std::vector<std::pair<NicId, std::string>> table_keys() const;

private:
    struct AppState {
        AccessPattern pattern = AccessPattern::NonExternalWrite;
        std::vector<NicId> replicas;  // ascending nic order
    };
    const AppState& app_state(const std::string& app) const;
    SimTime rtt(NicId a, NicId b) const;
    double link_bw(NicId a, NicId b) const;

    const Cluster* cluster_;
    StateFabricConfig cfg_;
    std::map<std::string, AppState> apps_;
    std::map<std::pair<NicId, std::string>, StateTable> tables_;
    std::map<std::string, Reducer> reducers_;
    StateOpCounters counters_;
};

// Bundled reducers: "sum" over int64 values, "count" over entries.
void register_builtin_reducers(StateFabric& fabric);

// StateCtx adapter binding UCF state calls to (nic, app) on a fabric.
class FabricStateCtx final : public StateCtx {
public:
    FabricStateCtx(StateFabric* fabric, NicId nic, std::string app)
        : fabric_(fabric), nic_(nic), app_(std::move(app)) {}

    void set_now(SimTime now) { now_ = now; }
    void add(const std::string& name, std::span<const std::uint8_t> value) override;
    void set(const std::string& name, std::span<const std::uint8_t> value) override;
    void remove(const std::string& name) override;
    std::optional<std::vector<std::uint8_t>> get(const std::string& name) override;
    SimTime take_cost() override;

private:
    StateFabric* fabric_;
    NicId nic_;
    std::string app_;
    SimTime now_ = 0;
    SimTime cost_ = 0;
};

}  // namespace nicpool
