#include <doctest.h>

#include <random>

#include "nicpool/state_engine.hpp"

using namespace nicpool;

namespace {

Cluster eight_nics() {
    ClusterConfig cfg;
    for (int i = 0; i < 8; ++i) {
        NicConfig n;
        n.name = "n" + std::to_string(i);
        n.total_cores = 8;
        n.memory_gb = 32;
        cfg.nics.push_back(n);
    }
    return Cluster::build(cfg);
}

std::vector<std::uint8_t> bytes(std::initializer_list<int> v) {
    std::vector<std::uint8_t> out;
    for (int b : v) out.push_back(static_cast<std::uint8_t>(b));
    return out;
}

}  // namespace

TEST_CASE("state entries serialize to exactly 64 bytes") {
    static_assert(kStateEntryBytes == 64);
    StateEntry e;
    e.set_name("flow:counter");
    e.h_key = fnv1a64(std::string_view("flow:counter"));
    e.s_addr = 42;
    e.s_len = 8;
    e.lu_time = 123456789;
    auto raw = e.serialize();
    CHECK(raw.size() == 64);
    // name occupies the first 24 bytes, zero padded
    CHECK(raw[0] == 'f');
    CHECK(raw[11] == 'r');
    CHECK(raw[12] == 0);
    CHECK(e.name() == "flow:counter");
}

TEST_CASE("bucket placement follows h_key mod 4096") {
    StateTable t;
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
        std::string name = "k" + std::to_string(rng());
        if (t.contains(name)) continue;
        t.add(name, encode_i64(static_cast<std::int64_t>(i)), 0, 0, 0);
        const StateEntry* e = t.find(name);
        REQUIRE(e != nullptr);
        CHECK(e->h_key == fnv1a64(name));
    }
    CHECK(t.size() >= 499);
}

TEST_CASE("six operators under the two access patterns") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    register_builtin_reducers(fabric);
    fabric.register_app("ew", AccessPattern::FullAccess, {0, 1, 2});
    fabric.register_app("local", AccessPattern::NonExternalWrite, {0, 1, 2});

    SUBCASE("full-access set propagates to every replica") {
        fabric.add(0, "ew", "x", bytes({1}), 100);
        auto before = fabric.counters().write_messages;
        SimTime cost = fabric.set(0, "ew", "x", bytes({2}), 200);
        CHECK(fabric.counters().write_messages - before == 2);
        CHECK(cost == cluster.network().rtt_time(0, 1));  // parallel writes, worst peer
        for (NicId n : {0, 1, 2}) {
            auto v = fabric.table(n, "ew").get("x", 300);
            REQUIRE(v.has_value());
            CHECK((*v)[0] == 2);
        }
    }
    SUBCASE("non-external-write set stays local") {
        fabric.add(0, "local", "x", bytes({1}), 100);
        fabric.set(0, "local", "x", bytes({9}), 150);
        CHECK_FALSE(fabric.table(1, "local").contains("x"));
    }
    SUBCASE("get checks local first, then remote in nic order") {
        fabric.add(1, "local", "remote_only", bytes({7}), 100);
        auto [v0, c0] = fabric.get(1, "local", "remote_only", 200);
        REQUIRE(v0.has_value());
        CHECK(c0 == 0);  // local hit costs nothing
        auto before = fabric.counters().read_messages;
        auto [v1, c1] = fabric.get(0, "local", "remote_only", 300);
        REQUIRE(v1.has_value());
        CHECK((*v1)[0] == 7);
        CHECK(c1 == cluster.network().rtt_time(0, 1));
        CHECK(fabric.counters().read_messages - before == 1);
    }
    SUBCASE("global miss returns NotFound after probing all peers") {
        auto [v, cost] = fabric.get(0, "local", "absent", 100);
        CHECK_FALSE(v.has_value());
        CHECK(cost == cluster.network().rtt_time(0, 1) + cluster.network().rtt_time(0, 2));
    }
    SUBCASE("remove of an absent name is NotFound") {
        try {
            fabric.remove(0, "local", "ghost", 100);
            FAIL("expected NotFound");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NotFound);
        }
    }
    SUBCASE("duplicate add rejected") {
        fabric.add(0, "local", "dup", bytes({1}), 100);
        try {
            fabric.add(0, "local", "dup", bytes({1}), 200);
            FAIL("expected DuplicateAdd");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DuplicateAdd);
        }
    }
    SUBCASE("oversized values rejected") {
        std::vector<std::uint8_t> big(5000, 1);
        try {
            fabric.add(0, "local", "big", big, 100);
            FAIL("expected ValueTooLarge");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::ValueTooLarge);
        }
    }
}

TEST_CASE("get-after-set returns the latest value") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    fabric.register_app("a", AccessPattern::FullAccess, {0, 1});
    fabric.add(0, "a", "k", encode_i64(1), 10);
    fabric.set(0, "a", "k", encode_i64(2), 20);
    auto [v, cost] = fabric.get(0, "a", "k", 30);
    REQUIRE(v.has_value());
    CHECK(decode_i64(*v) == 2);
}

TEST_CASE("traverse unions all replicas") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    fabric.register_app("nw", AccessPattern::NonExternalWrite, {0, 1, 2, 3, 4, 5, 6, 7});

    SUBCASE("eight NICs with distinct states union fully") {
        for (NicId n = 0; n < 8; ++n)
            for (int i = 0; i < 100; ++i)
                fabric.add(n, "nw", "n" + std::to_string(n) + ":" + std::to_string(i),
                           encode_i64(i), 10);
        auto [entries, cost] = fabric.traverse(0, "nw", 100);
        CHECK(entries.size() == 800);
        CHECK(cost > 0);
    }
    SUBCASE("single replica returns exactly its entries") {
        fabric.set_replicas("nw", {3});
        fabric.add(3, "nw", "only", encode_i64(5), 10);
        auto [entries, cost] = fabric.traverse(3, "nw", 100);
        CHECK(entries.size() == 1);
        CHECK(cost == 0);
    }
}

TEST_CASE("full-access traverse collapses duplicates by freshest lu_time") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    fabric.register_app("fa", AccessPattern::FullAccess, {0, 1, 2});
    fabric.add(0, "fa", "k", encode_i64(1), 10);
    auto [entries, cost] = fabric.traverse(1, "fa", 50);
    CHECK(entries.size() == 1);
    CHECK(decode_i64(entries[0].second) == 1);
}

TEST_CASE("compute equals traverse plus local reduction") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    register_builtin_reducers(fabric);

    SUBCASE("sum over per-NIC counters") {
        fabric.register_app("m", AccessPattern::NonExternalWrite, {0, 1, 2});
        fabric.add(0, "m", "c0", encode_i64(10), 1);
        fabric.add(1, "m", "c1", encode_i64(20), 1);
        fabric.add(2, "m", "c2", encode_i64(30), 1);
        auto [acc, cost] = fabric.compute(0, "m", "sum", 10);
        CHECK(decode_i64(acc) == 60);
    }
    SUBCASE("count over 8 NICs x 100 states") {
        fabric.register_app("m", AccessPattern::NonExternalWrite, {0, 1, 2, 3, 4, 5, 6, 7});
        for (NicId n = 0; n < 8; ++n)
            for (int i = 0; i < 100; ++i)
                fabric.add(n, "m", "n" + std::to_string(n) + ":" + std::to_string(i), encode_i64(1),
                           1);
        auto [acc, cost] = fabric.compute(2, "m", "count", 10);
        CHECK(decode_i64(acc) == 800);
    }
    SUBCASE("non-reducible ucf rejected") {
        fabric.register_app("m", AccessPattern::NonExternalWrite, {0});
        try {
            fabric.compute(0, "m", "not_a_reducer", 10);
            FAIL("expected NonReducibleUcf");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NonReducibleUcf);
        }
    }
}

TEST_CASE("randomized oracle: compute == reduce(traverse) up to 2^12 entries") {
    Cluster cluster = eight_nics();
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 6; ++trial) {
        StateFabric fabric(&cluster);
        register_builtin_reducers(fabric);
        AccessPattern pattern =
            trial % 2 == 0 ? AccessPattern::NonExternalWrite : AccessPattern::FullAccess;
        fabric.register_app("x", pattern, {0, 1, 2, 3, 4, 5, 6, 7});
        size_t entries = 1u << (6 + 2 * (trial / 2));  // 64 .. 4096
        for (size_t i = 0; i < entries; ++i) {
            NicId writer = static_cast<NicId>(rng() % 8);
            fabric.add(writer, "x", "k" + std::to_string(i),
                       encode_i64(static_cast<std::int64_t>(rng() % 1000)),
                       static_cast<SimTime>(i));
        }
        auto [acc, c1] = fabric.compute(3, "x", "sum", 1000000);
        auto [all, c2] = fabric.traverse(3, "x", 1000000);
        std::int64_t oracle = 0;
        for (auto& [name, value] : all) oracle += decode_i64(value);
        CHECK(decode_i64(acc) == oracle);

        auto [cnt, c3] = fabric.compute(5, "x", "count", 2000000);
        CHECK(decode_i64(cnt) == static_cast<std::int64_t>(all.size()));
    }
}

TEST_CASE("full-access convergence: single-writer tables are byte-identical") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    fabric.register_app("fa", AccessPattern::FullAccess, {0, 1, 2});
    std::mt19937_64 rng(59);
    std::vector<std::string> names;
    for (int op = 0; op < 800; ++op) {
        switch (rng() % 3) {
            case 0: {
                std::string name = "s" + std::to_string(rng() % 200);
                if (!fabric.table(0, "fa").contains(name)) {
                    fabric.add(0, "fa", name, encode_i64(static_cast<std::int64_t>(rng())), op);
                    names.push_back(name);
                }
                break;
            }
            case 1: {
                if (names.empty()) break;
                const std::string& name = names[rng() % names.size()];
                if (fabric.table(0, "fa").contains(name))
                    fabric.set(0, "fa", name, encode_i64(static_cast<std::int64_t>(rng())), op);
                break;
            }
            default: {
                if (names.empty()) break;
                size_t pick = rng() % names.size();
                if (fabric.table(0, "fa").contains(names[pick]))
                    fabric.remove(0, "fa", names[pick], op);
                break;
            }
        }
    }
    auto bytes0 = fabric.table(0, "fa").serialize();
    CHECK(bytes0 == fabric.table(1, "fa").serialize());
    CHECK(bytes0 == fabric.table(2, "fa").serialize());
    CHECK(bytes0.size() == fabric.table(0, "fa").size() * kStateEntryBytes);
}

TEST_CASE("eviction uses a strict lifespan threshold") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster, StateFabricConfig{4096, 500.0});
    fabric.register_app("a", AccessPattern::NonExternalWrite, {0});
    fabric.add(0, "a", "old", encode_i64(1), 0);

    SUBCASE("exactly at the threshold is retained") {
        CHECK(fabric.evict_expired(500 * kSec) == 0);
        CHECK(fabric.table(0, "a").contains("old"));
    }
    SUBCASE("past the threshold is evicted") {
        CHECK(fabric.evict_expired(501 * kSec) == 1);
        CHECK_FALSE(fabric.table(0, "a").contains("old"));
    }
    SUBCASE("empty table evicts nothing") {
        fabric.remove(0, "a", "old", 1);
        CHECK(fabric.evict_expired(1000 * kSec) == 0);
    }
    SUBCASE("access refreshes the lifespan") {
        fabric.get(0, "a", "old", 400 * kSec);
        CHECK(fabric.evict_expired(700 * kSec) == 0);
        CHECK(fabric.evict_expired(901 * kSec) == 1);
    }
}

TEST_CASE("dirty tracking and snapshot restore support failover sync") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    fabric.register_app("a", AccessPattern::NonExternalWrite, {0, 1});
    fabric.add(0, "a", "x", encode_i64(1), 10);
    fabric.add(0, "a", "y", encode_i64(2), 10);

    StateFabric::TableSnapshot backup;
    CHECK(fabric.sync_dirty_to(0, "a", backup) > 0);
    CHECK(backup.entries.size() == 2);

    // nothing changed: idempotent
    CHECK(fabric.sync_dirty_to(0, "a", backup) == 0);
    CHECK(backup.entries.size() == 2);

    fabric.set(0, "a", "x", encode_i64(9), 20);
    fabric.sync_dirty_to(0, "a", backup);

    fabric.restore(7, "a", backup, 100);
    auto v = fabric.table(7, "a").get("x", 101);
    REQUIRE(v.has_value());
    CHECK(decode_i64(*v) == 9);
    CHECK(fabric.table(7, "a").size() == 2);
}

TEST_CASE("flow-prefixed entries migrate between NICs") {
    Cluster cluster = eight_nics();
    StateFabric fabric(&cluster);
    fabric.register_app("a", AccessPattern::NonExternalWrite, {0, 1});
    FiveTuple flow;
    flow.src_ip = 1;
    std::string prefix = flow_state_prefix(flow);
    fabric.add(0, "a", prefix + "pkts", encode_i64(5), 10);
    fabric.add(0, "a", "unrelated", encode_i64(1), 10);

    std::int64_t moved = fabric.migrate_entries(0, 1, "a", prefix, 50);
    CHECK(moved > 0);
    CHECK(fabric.table(1, "a").contains(prefix + "pkts"));
    CHECK_FALSE(fabric.table(1, "a").contains("unrelated"));
}
