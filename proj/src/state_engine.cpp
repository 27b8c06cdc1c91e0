#include "nicpool/state_engine.hpp"

#include <algorithm>
#include <cstring>

#include "nicpool/util.hpp"

namespace nicpool {

std::string StateEntry::name() const {
    size_t len = 0;
    while (len < kStateNameBytes && s_name[len] != '\0') ++len;
    return std::string(s_name.data(), len);
}

void StateEntry::set_name(const std::string& n) {
    s_name.fill('\0');
    std::memcpy(s_name.data(), n.data(), std::min(n.size(), kStateNameBytes));
}

std::array<std::uint8_t, kStateEntryBytes> StateEntry::serialize() const {
    std::array<std::uint8_t, kStateEntryBytes> out{};
    size_t off = 0;
    std::memcpy(out.data(), s_name.data(), kStateNameBytes);
    off += kStateNameBytes;
    auto put64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out[off++] = static_cast<std::uint8_t>(v >> (8 * i));
    };
    put64(h_key);
    put64(s_addr);
    put64(s_len);
    put64(static_cast<std::uint64_t>(lu_time));
    put64(pad);
    return out;
}

bool StateTable::contains(const std::string& name) const { return find(name) != nullptr; }

StateEntry* StateTable::find(const std::string& name) {
    std::uint64_t h = fnv1a64(name);
    auto& chain = buckets_[bucket_of(h)];
    for (auto& e : chain)
        if (e.h_key == h && e.name() == name) return &e;
    return nullptr;
}

const StateEntry* StateTable::find(const std::string& name) const {
    return const_cast<StateTable*>(this)->find(name);
}

void StateTable::add(const std::string& name, std::span<const std::uint8_t> value, SimTime lu_time,
                     SimTime stamp, NicId writer) {
    if (name.size() > kStateNameBytes)
        throw_error(Errc::BadParams, "state name longer than 24 bytes");
    if (contains(name)) throw_error(Errc::DuplicateAdd, "state '" + name + "'");
    StateEntry e;
    e.set_name(name);
    e.h_key = fnv1a64(name);
    e.s_addr = next_addr_++;
    e.s_len = value.size();
    e.lu_time = lu_time;
    e.write_stamp = stamp;
    e.writer = writer;
    region_[e.s_addr].assign(value.begin(), value.end());
    buckets_[bucket_of(e.h_key)].push_back(e);
    ++count_;
    dirty_.insert(name);
}

void StateTable::set(const std::string& name, std::span<const std::uint8_t> value, SimTime lu_time,
                     SimTime stamp, NicId writer) {
    StateEntry* e = find(name);
    if (!e) throw_error(Errc::NotFound, "state '" + name + "'");
    // last writer wins by (arrival time, writer id)
    if (std::make_pair(stamp, writer) < std::make_pair(e->write_stamp, e->writer)) return;
    region_[e->s_addr].assign(value.begin(), value.end());
    e->s_len = value.size();
    e->lu_time = lu_time;
    e->write_stamp = stamp;
    e->writer = writer;
    dirty_.insert(name);
}

void StateTable::remove(const std::string& name) {
    std::uint64_t h = fnv1a64(name);
    auto& chain = buckets_[bucket_of(h)];
    for (size_t i = 0; i < chain.size(); ++i) {
        if (chain[i].h_key == h && chain[i].name() == name) {
            region_.erase(chain[i].s_addr);
            chain.erase(chain.begin() + static_cast<std::ptrdiff_t>(i));
            --count_;
            dirty_.insert(name);
            return;
        }
    }
    throw_error(Errc::NotFound, "state '" + name + "'");
}

std::optional<std::vector<std::uint8_t>> StateTable::get(const std::string& name, SimTime now) {
    StateEntry* e = find(name);
    if (!e) return std::nullopt;
    e->lu_time = now;
    return region_.at(e->s_addr);
}

std::vector<std::pair<std::string, std::vector<std::uint8_t>>> StateTable::entries() const {
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> out;
    for (const auto& chain : buckets_)
        for (const auto& e : chain) out.emplace_back(e.name(), region_.at(e.s_addr));
    return out;
}

std::vector<const StateEntry*> StateTable::entry_records() const {
    std::vector<const StateEntry*> out;
    for (const auto& chain : buckets_)
        for (const auto& e : chain) out.push_back(&e);
    return out;
}

std::vector<std::uint8_t> StateTable::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(count_ * kStateEntryBytes);
    for (const auto& chain : buckets_)
        for (const auto& e : chain) {
            auto raw = e.serialize();
            out.insert(out.end(), raw.begin(), raw.end());
        }
    return out;
}

size_t StateTable::evict_expired(SimTime now, SimTime threshold) {
    size_t evicted = 0;
    for (auto& chain : buckets_) {
        for (size_t i = chain.size(); i-- > 0;) {
            if (now - chain[i].lu_time > threshold) {
                region_.erase(chain[i].s_addr);
                chain.erase(chain.begin() + static_cast<std::ptrdiff_t>(i));
                --count_;
                ++evicted;
            }
        }
    }
    return evicted;
}

std::int64_t StateTable::bytes() const {
    std::int64_t total = static_cast<std::int64_t>(count_ * kStateEntryBytes);
    for (const auto& [addr, v] : region_) total += static_cast<std::int64_t>(v.size());
    return total;
}

const std::vector<std::uint8_t>& StateTable::value_of(const StateEntry& e) const {
    return region_.at(e.s_addr);
}

// ---------------- fabric ----------------

StateFabric::StateFabric(const Cluster* cluster, StateFabricConfig cfg)
    : cluster_(cluster), cfg_(cfg) {}

void StateFabric::register_app(const std::string& app_id, AccessPattern pattern,
                               std::vector<NicId> replicas) {
    std::sort(replicas.begin(), replicas.end());
    replicas.erase(std::unique(replicas.begin(), replicas.end()), replicas.end());
    apps_[app_id] = AppState{pattern, std::move(replicas)};
    for (NicId n : apps_[app_id].replicas) tables_.try_emplace({n, app_id});
}

void StateFabric::set_replicas(const std::string& app_id, std::vector<NicId> replicas) {
    auto it = apps_.find(app_id);
    if (it == apps_.end()) throw_error(Errc::UnknownApp, app_id);
    std::sort(replicas.begin(), replicas.end());
    replicas.erase(std::unique(replicas.begin(), replicas.end()), replicas.end());
    it->second.replicas = std::move(replicas);
    for (NicId n : it->second.replicas) tables_.try_emplace({n, app_id});
}

std::vector<NicId> StateFabric::replicas(const std::string& app_id) const {
    return app_state(app_id).replicas;
}

bool StateFabric::has_app(const std::string& app_id) const { return apps_.count(app_id) > 0; }

void StateFabric::register_reducer(const std::string& name, Reducer r) {
    reducers_[name] = std::move(r);
}

const StateFabric::AppState& StateFabric::app_state(const std::string& app) const {
    auto it = apps_.find(app);
    if (it == apps_.end()) throw_error(Errc::UnknownApp, app);
    return it->second;
}

SimTime StateFabric::rtt(NicId a, NicId b) const { return cluster_->network().rtt_time(a, b); }

double StateFabric::link_bw(NicId a, NicId b) const {
    return std::min(cluster_->nic(a).port_bw_gbps, cluster_->nic(b).port_bw_gbps);
}

StateTable& StateFabric::table(NicId nic, const std::string& app) {
    return tables_[{nic, app}];
}

const StateTable* StateFabric::table_if(NicId nic, const std::string& app) const {
    auto it = tables_.find({nic, app});
    return it == tables_.end() ? nullptr : &it->second;
}

SimTime StateFabric::add(NicId caller, const std::string& app, const std::string& name,
                         std::span<const std::uint8_t> value, SimTime now) {
    const auto& st = app_state(app);
    if (value.size() > cfg_.max_value_bytes) throw_error(Errc::ValueTooLarge, name);
    table(caller, app).add(name, value, now, now, caller);
    if (st.pattern == AccessPattern::NonExternalWrite) return 0;
    SimTime worst = 0;
    for (NicId peer : st.replicas) {
        if (peer == caller) continue;
        SimTime arrive = now + rtt(caller, peer) / 2;
        table(peer, app).add(name, value, now, arrive, caller);
        counters_.write_messages++;
        worst = std::max(worst, rtt(caller, peer));
    }
    return worst;  // ack after the slowest propagation round-trip
}

SimTime StateFabric::set(NicId caller, const std::string& app, const std::string& name,
                         std::span<const std::uint8_t> value, SimTime now) {
    const auto& st = app_state(app);
    if (value.size() > cfg_.max_value_bytes) throw_error(Errc::ValueTooLarge, name);
    table(caller, app).set(name, value, now, now, caller);
    if (st.pattern == AccessPattern::NonExternalWrite) return 0;
    SimTime worst = 0;
    for (NicId peer : st.replicas) {
        if (peer == caller) continue;
        SimTime arrive = now + rtt(caller, peer) / 2;
        table(peer, app).set(name, value, now, arrive, caller);
        counters_.write_messages++;
        worst = std::max(worst, rtt(caller, peer));
    }
    return worst;
}

SimTime StateFabric::remove(NicId caller, const std::string& app, const std::string& name,
                            SimTime now) {
    const auto& st = app_state(app);
    table(caller, app).remove(name);
    if (st.pattern == AccessPattern::NonExternalWrite) return 0;
    SimTime worst = 0;
    for (NicId peer : st.replicas) {
        if (peer == caller) continue;
        if (table(peer, app).contains(name)) table(peer, app).remove(name);
        counters_.write_messages++;
        worst = std::max(worst, rtt(caller, peer));
    }
    return worst;
}

std::pair<std::optional<std::vector<std::uint8_t>>, SimTime> StateFabric::get(
    NicId caller, const std::string& app, const std::string& name, SimTime now) {
    const auto& st = app_state(app);
    auto local = table(caller, app).get(name, now);
    if (local) return {std::move(local), 0};
    // remote probes in ascending nic order, one READ round-trip each
    SimTime cost = 0;
    for (NicId peer : st.replicas) {
        if (peer == caller) continue;
        cost += rtt(caller, peer);
        counters_.read_messages++;
        auto v = table(peer, app).get(name, now + cost);
        if (v) return {std::move(v), cost};
    }
    return {std::nullopt, cost};
}

std::pair<std::vector<std::pair<std::string, std::vector<std::uint8_t>>>, SimTime>
StateFabric::traverse(NicId caller, const std::string& app, SimTime now) {
    const auto& st = app_state(app);
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> out = table(caller, app).entries();

    if (st.pattern == AccessPattern::FullAccess) {
        // replicas are copies; collapse by name keeping the freshest entry
        std::map<std::string, std::pair<SimTime, std::vector<std::uint8_t>>> merged;
        for (NicId peer : st.replicas) {
            const StateTable* t = table_if(peer, app);
            if (!t) continue;
            for (const StateEntry* e : t->entry_records()) {
                auto& slot = merged[e->name()];
                if (slot.first <= e->lu_time) slot = {e->lu_time, t->value_of(*e)};
            }
        }
        out.clear();
        for (auto& [name, v] : merged) out.emplace_back(name, std::move(v.second));
    } else {
        for (NicId peer : st.replicas) {
            if (peer == caller) continue;
            const StateTable* t = table_if(peer, app);
            if (!t) continue;
            for (auto& e : t->entries()) out.push_back(std::move(e));
        }
    }

    // one bulk READ per remote NIC, issued in parallel
    SimTime worst = 0;
    for (NicId peer : st.replicas) {
        if (peer == caller) continue;
        const StateTable* t = table_if(peer, app);
        std::int64_t bytes = t ? t->bytes() : 0;
        counters_.bulk_reads++;
        worst = std::max(worst, rtt(caller, peer) + serialization_time(bytes, link_bw(caller, peer)));
    }
    (void)now;
    return {std::move(out), worst};
}

std::pair<std::vector<std::uint8_t>, SimTime> StateFabric::compute(NicId caller,
                                                                   const std::string& app,
                                                                   const std::string& reducer,
                                                                   SimTime now) {
    const auto& st = app_state(app);
    auto rit = reducers_.find(reducer);
    if (rit == reducers_.end()) throw_error(Errc::NonReducibleUcf, reducer);
    const Reducer& r = rit->second;

    std::vector<std::uint8_t> acc = r.init();
    for (auto& [name, value] : table(caller, app).entries()) r.step(acc, name, value);

    if (st.pattern == AccessPattern::NonExternalWrite) {
        // instruction out, partial accumulator back, per remote NIC
        SimTime worst = 0;
        for (NicId peer : st.replicas) {
            if (peer == caller) continue;
            const StateTable* t = table_if(peer, app);
            std::vector<std::uint8_t> part = r.init();
            if (t)
                for (auto& [name, value] : t->entries()) r.step(part, name, value);
            r.merge(acc, part);
            counters_.compute_messages++;
            worst = std::max(worst,
                             rtt(caller, peer) + serialization_time(static_cast<std::int64_t>(part.size()),
                                                                    link_bw(caller, peer)));
        }
        (void)now;
        return {std::move(acc), worst};
    }
    // full-access tables hold every replica locally
    return {std::move(acc), 0};
}

size_t StateFabric::evict_expired(SimTime now) {
    SimTime threshold = static_cast<SimTime>(std::llround(cfg_.lifespan_sec * 1e9));
    size_t total = 0;
    for (auto& [key, t] : tables_) total += t.evict_expired(now, threshold);
    return total;
}

StateFabric::TableSnapshot StateFabric::snapshot(NicId nic, const std::string& app) const {
    TableSnapshot snap;
    const StateTable* t = table_if(nic, app);
    if (!t) return snap;
    for (const StateEntry* e : t->entry_records()) {
        snap.entries.emplace_back(e->name(), t->value_of(*e));
        snap.lu_times.push_back(e->lu_time);
    }
    snap.bytes = t->bytes();
    return snap;
}

std::int64_t StateFabric::sync_dirty_to(NicId src, const std::string& app, TableSnapshot& backup) {
    StateTable& t = table(src, app);
    std::int64_t moved = 0;
    for (const auto& name : t.dirty()) {
        // replace any older copy of the entry in the snapshot
        for (size_t i = 0; i < backup.entries.size(); ++i) {
            if (backup.entries[i].first == name) {
                backup.entries.erase(backup.entries.begin() + static_cast<std::ptrdiff_t>(i));
                backup.lu_times.erase(backup.lu_times.begin() + static_cast<std::ptrdiff_t>(i));
                break;
            }
        }
        const StateEntry* e = t.find(name);
        if (e) {
            backup.entries.emplace_back(name, t.value_of(*e));
            backup.lu_times.push_back(e->lu_time);
            moved += static_cast<std::int64_t>(kStateEntryBytes + e->s_len);
        } else {
            moved += kStateEntryBytes;  // tombstone
        }
    }
    t.dirty().clear();
    return moved;
}

void StateFabric::restore(NicId nic, const std::string& app, const TableSnapshot& snap, SimTime now) {
    StateTable fresh;
    for (size_t i = 0; i < snap.entries.size(); ++i)
        fresh.add(snap.entries[i].first, snap.entries[i].second, snap.lu_times[i], now, nic);
    fresh.dirty().clear();
    tables_[{nic, app}] = std::move(fresh);
}

std::int64_t StateFabric::migrate_entries(NicId src, NicId dst, const std::string& app,
                                          const std::string& prefix, SimTime now) {
    const StateTable* s = table_if(src, app);
    if (!s || src == dst) return 0;
    StateTable& d = table(dst, app);
    std::int64_t bytes = 0;
    for (const StateEntry* e : s->entry_records()) {
        std::string name = e->name();
        if (name.rfind(prefix, 0) != 0) continue;
        const auto& value = s->value_of(*e);
        if (d.contains(name))
            d.set(name, value, now, now, dst);
        else
            d.add(name, value, now, now, dst);
        bytes += static_cast<std::int64_t>(kStateEntryBytes + value.size());
    }
    return bytes;
}

void StateFabric::drop_tables_on(NicId nic) {
    for (auto it = tables_.begin(); it != tables_.end();) {
        if (it->first.first == nic)
            it = tables_.erase(it);
        else
            ++it;
    }
}

std::vector<std::pair<NicId, std::string>> StateFabric::table_keys() const {
    std::vector<std::pair<NicId, std::string>> out;
    for (const auto& [key, t] : tables_) out.push_back(key);
    return out;
}

void register_builtin_reducers(StateFabric& fabric) {
    Reducer sum;
    sum.init = [] { return encode_i64(0); };
    sum.step = [](std::vector<std::uint8_t>& acc, const std::string&, std::span<const std::uint8_t> v) {
        acc = encode_i64(decode_i64(acc) + decode_i64(v));
    };
    sum.merge = [](std::vector<std::uint8_t>& acc, std::span<const std::uint8_t> o) {
        acc = encode_i64(decode_i64(acc) + decode_i64(o));
    };
    fabric.register_reducer("sum", sum);

    Reducer count;
    count.init = [] { return encode_i64(0); };
    count.step = [](std::vector<std::uint8_t>& acc, const std::string&, std::span<const std::uint8_t>) {
        acc = encode_i64(decode_i64(acc) + 1);
    };
    count.merge = [](std::vector<std::uint8_t>& acc, std::span<const std::uint8_t> o) {
        acc = encode_i64(decode_i64(acc) + decode_i64(o));
    };
    fabric.register_reducer("count", count);
}

// ---------------- FabricStateCtx ----------------

void FabricStateCtx::add(const std::string& name, std::span<const std::uint8_t> value) {
    cost_ += fabric_->add(nic_, app_, name, value, now_ + cost_);
}
void FabricStateCtx::set(const std::string& name, std::span<const std::uint8_t> value) {
    cost_ += fabric_->set(nic_, app_, name, value, now_ + cost_);
}
void FabricStateCtx::remove(const std::string& name) {
    cost_ += fabric_->remove(nic_, app_, name, now_ + cost_);
}
std::optional<std::vector<std::uint8_t>> FabricStateCtx::get(const std::string& name) {
    auto [v, c] = fabric_->get(nic_, app_, name, now_ + cost_);
    cost_ += c;
    return v;
}
SimTime FabricStateCtx::take_cost() {
    SimTime c = cost_;
    cost_ = 0;
    return c;
}

}  // namespace nicpool
