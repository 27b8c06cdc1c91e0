#include <doctest.h>

#include <random>

#include "nicpool/cluster.hpp"

using namespace nicpool;

namespace {

// the rack from the evaluation setup: 8x BF2, 4x BF1, 4x Pensando
ClusterConfig rack16() {
    ClusterConfig cfg;
    for (int i = 0; i < 8; ++i) {
        NicConfig n;
        n.name = "bf2-" + std::to_string(i);
        n.model = "BF2";
        n.total_cores = 8;
        n.memory_gb = 32;
        n.accelerators = {{AcceleratorKind::Regex, 18.1, 5.0, 0.0, 1},
                          {AcceleratorKind::Compression, 20.0, 4.0, 0.0, 1}};
        cfg.nics.push_back(n);
    }
    for (int i = 0; i < 4; ++i) {
        NicConfig n;
        n.name = "bf1-" + std::to_string(i);
        n.model = "BF1";
        n.total_cores = 16;
        n.memory_gb = 64;
        cfg.nics.push_back(n);
    }
    for (int i = 0; i < 4; ++i) {
        NicConfig n;
        n.name = "pensando-" + std::to_string(i);
        n.model = "Pensando";
        n.total_cores = 16;
        n.memory_gb = 64;
        n.accelerators = {{AcceleratorKind::Aes, 40.0, 3.0, 0.0, 1},
                          {AcceleratorKind::Compression, 20.0, 4.5, 0.0, 1}};
        cfg.nics.push_back(n);
    }
    return cfg;
}

}  // namespace

TEST_CASE("builds the 16-NIC evaluation rack") {
    Cluster c = Cluster::build(rack16());
    CHECK(c.nics().size() == 16);
    CHECK(c.nic(0).model == "BF2");
    CHECK(c.nic(0).unit_capacity() == 7);  // one core reserved for the TO
    CHECK(c.nic(0).accel_count(AcceleratorKind::Regex) == 1);
    CHECK(c.nic(8).model == "BF1");
    CHECK(c.nic(12).accel_count(AcceleratorKind::Aes) == 1);
    CHECK(c.network().rtt(0, 1) == doctest::Approx(4.52));
    CHECK(c.network().rtt(3, 3) == 0.0);
}

TEST_CASE("cluster validation") {
    SUBCASE("empty cluster") {
        try {
            Cluster::build(ClusterConfig{});
            FAIL("expected EmptyCluster");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::EmptyCluster);
        }
    }
    SUBCASE("negative resources") {
        ClusterConfig cfg;
        NicConfig n;
        n.name = "x";
        n.total_cores = -1;
        cfg.nics.push_back(n);
        CHECK_THROWS_AS(Cluster::build(cfg), Error);
    }
    SUBCASE("one reserved core on a one-core NIC leaves zero units") {
        ClusterConfig cfg;
        NicConfig n;
        n.name = "tiny";
        n.total_cores = 1;
        n.reserved_to_cores = 1;
        n.memory_gb = 8;
        cfg.nics.push_back(n);
        Cluster c = Cluster::build(cfg);
        CHECK(c.nic(0).unit_capacity() == 0);
        CHECK(c.nic(0).free_units() == 0);
    }
    SUBCASE("memory can bind before cores") {
        ClusterConfig cfg;
        NicConfig n;
        n.name = "lowmem";
        n.total_cores = 16;
        n.memory_gb = 8;  // two units worth of memory
        cfg.nics.push_back(n);
        Cluster c = Cluster::build(cfg);
        CHECK(c.nic(0).unit_capacity() == 2);
    }
}

TEST_CASE("allocate and reclaim") {
    Cluster c = Cluster::build(rack16());

    SUBCASE("cpu units decrease the free pool") {
        CHECK(c.nic(0).free_units() == 7);
        GrantId g = c.allocate(0, ResourceVector::cpu(2), "app");
        CHECK(c.nic(0).free_units() == 5);
        c.reclaim(g);
        CHECK(c.nic(0).free_units() == 7);
    }
    SUBCASE("missing accelerator kind reports the dimension") {
        try {
            c.allocate(0, ResourceVector::accelerator(AcceleratorKind::Aes, 1), "app");
            FAIL("expected Insufficient");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::Insufficient);
            CHECK(std::string(e.what()).find("aes") != std::string::npos);
        }
    }
    SUBCASE("accelerator units are exclusive") {
        c.allocate(0, ResourceVector::accelerator(AcceleratorKind::Regex, 1), "app1");
        try {
            c.allocate(0, ResourceVector::accelerator(AcceleratorKind::Regex, 1), "app2");
            FAIL("expected Insufficient");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::Insufficient);
        }
    }
    SUBCASE("grants reclaim exactly once") {
        GrantId g = c.allocate(0, ResourceVector::cpu(1), "app");
        c.reclaim(g);
        try {
            c.reclaim(g);
            FAIL("expected DoubleReclaim");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DoubleReclaim);
        }
    }
    SUBCASE("unknown nic") {
        CHECK_THROWS_AS(c.allocate(99, ResourceVector::cpu(1), "app"), Error);
    }
}

TEST_CASE("most_resourceful") {
    ClusterConfig cfg;
    for (int i = 0; i < 3; ++i) {
        NicConfig n;
        n.name = std::string("n") + std::to_string(i);
        n.total_cores = 9;
        n.memory_gb = 64;
        cfg.nics.push_back(n);
    }
    cfg.nics[2].accelerators = {{AcceleratorKind::Aes, 10.0, 1.0, 0.0, 1}};
    Cluster c = Cluster::build(cfg);

    SUBCASE("ties break to the lowest nic id") {
        c.allocate(0, ResourceVector::cpu(5), "a");  // free: {A:3, B:8, C:8}
        CHECK(c.most_resourceful({}) == 1);
    }
    SUBCASE("accelerator need filters candidates") {
        CHECK(c.most_resourceful(ResourceVector::accelerator(AcceleratorKind::Aes, 1)) == 2);
    }
    SUBCASE("falls back to max free cpu when no NIC satisfies accelerators") {
        CHECK(c.most_resourceful(ResourceVector::accelerator(AcceleratorKind::Sha, 1)) == 0);
    }
    SUBCASE("single NIC cluster returns it") {
        ClusterConfig one;
        one.nics.push_back(cfg.nics[0]);
        Cluster c1 = Cluster::build(one);
        CHECK(c1.most_resourceful({}) == 0);
    }
}

TEST_CASE("accelerators with better perf metrics are granted first") {
    ClusterConfig cfg;
    NicConfig n;
    n.name = "n0";
    n.total_cores = 4;
    n.memory_gb = 16;
    n.accelerators = {{AcceleratorKind::Regex, 10.0, 9.0, 0.0, 1},
                      {AcceleratorKind::Regex, 10.0, 2.0, 0.0, 1}};
    cfg.nics.push_back(n);
    Cluster c = Cluster::build(cfg);
    GrantId g = c.allocate(0, ResourceVector::accelerator(AcceleratorKind::Regex, 1), "app");
    REQUIRE(c.grant(g).accel_unit_ids.size() == 1);
    int uid = c.grant(g).accel_unit_ids[0];
    CHECK(c.nic(0).accelerators[static_cast<size_t>(uid)].perf_metric.fixed_us == 2.0);
}

TEST_CASE("conservation holds across random allocate/reclaim sequences") {
    Cluster c = Cluster::build(rack16());
    std::mt19937_64 rng(17);
    std::vector<GrantId> live;
    std::vector<ResourceVector> expect_total;
    for (const auto& n : c.nics()) expect_total.push_back(c.total_of(n.nic_id));

    for (int step = 0; step < 2000; ++step) {
        bool do_alloc = live.empty() || (rng() % 3 != 0);
        if (do_alloc) {
            NicId nic = static_cast<NicId>(rng() % c.nics().size());
            ResourceVector req;
            switch (rng() % 3) {
                case 0: req = ResourceVector::cpu(static_cast<int>(rng() % 4)); break;
                case 1: req = ResourceVector::accelerator(AcceleratorKind::Regex, 1); break;
                default:
                    req = ResourceVector::cpu(static_cast<int>(rng() % 3));
                    req.accel[AcceleratorKind::Compression] = 1;
                    break;
            }
            try {
                live.push_back(c.allocate(nic, req, "app" + std::to_string(rng() % 5)));
            } catch (const Error& e) {
                CHECK(e.code() == Errc::Insufficient);
            }
        } else {
            size_t pick = rng() % live.size();
            c.reclaim(live[pick]);
            live.erase(live.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        // free + granted == total on every NIC, every dimension
        for (const auto& n : c.nics()) {
            ResourceVector free = c.free_of(n.nic_id);
            ResourceVector granted = c.granted_of(n.nic_id);
            ResourceVector sum = free + granted;
            const ResourceVector& want = expect_total[static_cast<size_t>(n.nic_id)];
            CHECK(sum.cpu_units == want.cpu_units);
            for (auto& [k, cnt] : want.accel) CHECK(sum.accel[k] == cnt);
        }
    }
}

TEST_CASE("resource vector arithmetic never goes negative") {
    ResourceVector a = ResourceVector::cpu(2);
    ResourceVector b = ResourceVector::cpu(3);
    CHECK_THROWS_AS(a -= b, Error);
    ResourceVector d = ResourceVector::accelerator(AcceleratorKind::Aes, 1);
    ResourceVector e;
    CHECK_THROWS_AS(e -= d, Error);
}
