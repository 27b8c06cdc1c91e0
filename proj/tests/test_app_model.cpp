#include <doctest.h>

#include <random>

#include "nicpool/app_model.hpp"
#include "nicpool/examples_lib.hpp"

using namespace nicpool;

namespace {

std::set<AcceleratorKind> full_vocab() {
    return {AcceleratorKind::Regex, AcceleratorKind::Compression, AcceleratorKind::Aes,
            AcceleratorKind::Sha};
}

UcfRegistry make_registry() {
    UcfRegistry reg;
    register_builtin_ucfs(reg);
    reg.register_packet("drop_zero_byte", [](Packet& pkt, StateCtx&) {
        for (auto b : pkt.payload)
            if (b == 0) return StageAction::Drop;
        return StageAction::Pass;
    });
    reg.register_packet("panics", [](Packet&, StateCtx&) -> StageAction {
        throw std::runtime_error("boom");
    });
    reg.register_window("win_count", [](std::span<const Packet> w, FlowRecord& rec, StateCtx&) {
        rec.flow_meta["pkts"] = static_cast<std::int64_t>(w.size());
    });
    return reg;
}

StageSpec stage(const std::string& name, StageKind kind, const std::string& ucf) {
    StageSpec s;
    s.name = name;
    s.kind = kind;
    s.ucf = ucf;
    s.service_model.fixed_us = 1.0;
    return s;
}

Packet packet_of(std::uint16_t port, std::vector<std::uint8_t> payload) {
    Packet p;
    p.flow.src_ip = 0x0a000001;
    p.flow.dst_ip = 0x0a000002;
    p.flow.src_port = port;
    p.flow.dst_port = 80;
    p.payload = std::move(payload);
    p.payload_len = static_cast<std::uint32_t>(p.payload.size());
    return p;
}

}  // namespace

TEST_CASE("build_app validates a four-stage chain") {
    auto reg = make_registry();
    std::vector<StageSpec> stages;
    stages.push_back(stage("ddos", StageKind::PktFlt, "ddos_check"));
    StageSpec url = stage("url", StageKind::AccelFn, "url_check");
    url.accel = AcceleratorKind::Regex;
    stages.push_back(url);
    stages.push_back(stage("ipsec", StageKind::PktTrans, "ipsec_encap"));
    StageSpec aes = stage("aes", StageKind::AccelFn, "");
    aes.accel = AcceleratorKind::Aes;
    stages.push_back(aes);

    AppSpec app = build_app(stages, Abstraction::PacketLevel, false,
                            AccessPattern::NonExternalWrite, reg, full_vocab(), "isg");
    CHECK(app.app_id == "isg");
    CHECK(app.stages.size() == 4);
    CHECK(app.stages[0].resource_class.is_cpu);
    CHECK_FALSE(app.stages[1].resource_class.is_cpu);
    CHECK(app.stages[1].resource_class.accel == AcceleratorKind::Regex);
    CHECK(app.accelerator_kinds() == std::set<AcceleratorKind>{AcceleratorKind::Regex,
                                                               AcceleratorKind::Aes});
}

TEST_CASE("build_app rejections") {
    auto reg = make_registry();
    auto vocab = full_vocab();

    SUBCASE("empty pipeline") {
        try {
            build_app({}, Abstraction::PacketLevel, false, AccessPattern::NonExternalWrite, reg,
                      vocab);
            FAIL("expected EmptyPipeline");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::EmptyPipeline);
        }
    }
    SUBCASE("socket stage in a packet-level app") {
        try {
            build_app({stage("s", StageKind::SocketEpoll, "l7_gateway")}, Abstraction::PacketLevel,
                      false, AccessPattern::NonExternalWrite, reg, vocab);
            FAIL("expected AbstractionMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::AbstractionMismatch);
        }
    }
    SUBCASE("unresolved ucf") {
        try {
            build_app({stage("s", StageKind::PktFlt, "nope")}, Abstraction::PacketLevel, false,
                      AccessPattern::NonExternalWrite, reg, vocab);
            FAIL("expected UnknownUcf");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::UnknownUcf);
        }
    }
    SUBCASE("accelerator outside the vocabulary") {
        StageSpec s = stage("z", StageKind::AccelFn, "");
        s.accel = AcceleratorKind::Aes;
        try {
            build_app({s}, Abstraction::PacketLevel, false, AccessPattern::NonExternalWrite, reg,
                      {AcceleratorKind::Regex});
            FAIL("expected UnknownAccelerator");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::UnknownAccelerator);
        }
    }
}

TEST_CASE("execute_stage semantics") {
    auto reg = make_registry();
    NullStateCtx ctx;

    SUBCASE("pkt_flt drops on its criterion") {
        auto st = stage("f", StageKind::PktFlt, "drop_zero_byte");
        Packet zeros = packet_of(1000, std::vector<std::uint8_t>(16, 0));
        auto res = execute_stage(st, &zeros, ctx, reg);
        CHECK(res.kind == StageResult::Kind::Drop);
    }
    SUBCASE("identity pkt_trans passes unchanged") {
        auto st = stage("t", StageKind::PktTrans, "identity");
        Packet p = packet_of(1000, {1, 2, 3});
        Packet before = p;
        auto res = execute_stage(st, &p, ctx, reg);
        CHECK(res.kind == StageResult::Kind::Pass);
        CHECK(p.payload == before.payload);
        CHECK(p.pkt_meta == before.pkt_meta);
    }
    SUBCASE("flow_ext emits one record per completed window") {
        StageSpec st = stage("fx", StageKind::FlowExt, "win_count");
        st.window_size = 4;
        st.slide_interval = 4;
        std::vector<Packet> win;
        for (int i = 0; i < 4; ++i) win.push_back(packet_of(1000, {}));
        auto res = execute_stage(st, std::span<const Packet>(win), ctx, reg);
        CHECK(res.kind == StageResult::Kind::Emit);
        REQUIRE(res.emitted.has_value());
        CHECK(res.emitted->flow_meta.at("pkts") == 4);
    }
    SUBCASE("ucf exception drops the packet and flags the panic") {
        auto st = stage("p", StageKind::PktFlt, "panics");
        Packet p = packet_of(1000, {1});
        auto res = execute_stage(st, &p, ctx, reg);
        CHECK(res.kind == StageResult::Kind::Drop);
        CHECK(res.ucf_panic);
    }
    SUBCASE("type mismatch rejected") {
        auto st = stage("f", StageKind::PktFlt, "drop_zero_byte");
        FlowRecord rec;
        try {
            execute_stage(st, &rec, ctx, reg);
            FAIL("expected TypeMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::TypeMismatch);
        }
    }
    SUBCASE("stage execution is deterministic for fixed input") {
        auto st = stage("f", StageKind::PktFlt, "ddos_check");
        Packet a = packet_of(1000, std::vector<std::uint8_t>(100, 7));
        Packet b = a;
        auto r1 = execute_stage(st, &a, ctx, reg);
        auto r2 = execute_stage(st, &b, ctx, reg);
        CHECK(r1.kind == r2.kind);
        CHECK(a.payload == b.payload);
    }
}

TEST_CASE("builtin packet filters do not mutate packets they pass") {
    auto reg = make_registry();
    NullStateCtx ctx;
    std::mt19937_64 rng(3);
    for (const char* name : {"ddos_check", "acl_check", "drop_zero_byte"}) {
        auto st = stage("f", StageKind::PktFlt, name);
        for (int trial = 0; trial < 50; ++trial) {
            Packet p = packet_of(static_cast<std::uint16_t>(1000 + rng() % 500), {});
            p.payload.resize(rng() % 200);
            for (auto& b : p.payload) b = static_cast<std::uint8_t>(1 + rng() % 255);
            p.payload_len = static_cast<std::uint32_t>(p.payload.size());
            Packet before = p;
            auto res = execute_stage(st, &p, ctx, reg);
            if (res.kind == StageResult::Kind::Pass) {
                CHECK(p.payload == before.payload);
                CHECK(p.pkt_meta == before.pkt_meta);
                CHECK(p.flow == before.flow);
            }
        }
    }
}

TEST_CASE("accelerator reference behaviors") {
    SUBCASE("regex counts literal matches") {
        AccelParams params;
        params.rules = {"abc"};
        std::vector<std::uint8_t> payload{'x', 'x', 'a', 'b', 'c', 'x', 'x'};
        auto out = accel_reference(AcceleratorKind::Regex, params, payload);
        CHECK(out.match_info.match_count == 1);
        CHECK(out.payload == payload);
    }
    SUBCASE("aes-style permutation is deterministic and invertible") {
        AccelParams params;
        params.block_size = 16;
        params.key = 0x1234;
        std::vector<std::uint8_t> payload(100);
        for (size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i * 7);
        auto once = accel_reference(AcceleratorKind::Aes, params, payload);
        auto twice = accel_reference(AcceleratorKind::Aes, params, payload);
        CHECK(once.payload == twice.payload);
        CHECK(once.payload != payload);
        CHECK(accel_reference_inverse(AcceleratorKind::Aes, params, once.payload) == payload);
    }
    SUBCASE("compression round-trips") {
        AccelParams params;
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::uint8_t> payload(rng() % 1400);
            for (auto& b : payload) b = static_cast<std::uint8_t>(rng() % (trial + 2));
            auto out = accel_reference(AcceleratorKind::Compression, params, payload);
            CHECK(accel_reference_inverse(AcceleratorKind::Compression, params, out.payload) ==
                  payload);
        }
    }
    SUBCASE("sha appends an 8-byte tag") {
        AccelParams params;
        std::vector<std::uint8_t> payload{1, 2, 3};
        auto out = accel_reference(AcceleratorKind::Sha, params, payload);
        CHECK(out.payload.size() == payload.size() + 8);
        CHECK(std::equal(payload.begin(), payload.end(), out.payload.begin()));
    }
    SUBCASE("bad params rejected") {
        AccelParams params;
        params.block_size = 0;
        std::vector<std::uint8_t> payload{1};
        CHECK_THROWS_AS(accel_reference(AcceleratorKind::Aes, params, payload), Error);
    }
}

TEST_CASE("socket registration and epoll delivery") {
    auto reg = make_registry();
    NullStateCtx ctx;
    AppSpec app = build_app({stage("gw", StageKind::SocketEpoll, "l7_gateway")},
                            Abstraction::SocketLevel, true, AccessPattern::FullAccess, reg,
                            full_vocab(), "l7");
    SocketRegistry sockets;
    FiveTuple conn;
    conn.src_ip = 1;
    conn.dst_ip = 2;
    conn.src_port = 1234;
    conn.dst_port = 443;

    auto sid = sockets.register_socket(conn);

    SUBCASE("authentic message is redirected") {
        std::vector<std::uint8_t> body{'G', 'E', 'T', ' ', '/'};
        auto tagged = accel_reference(AcceleratorKind::Sha, AccelParams{}, body);
        auto res = sockets.deliver_epoll(app, sid, EpollKind::EpollIn, tagged.payload, ctx, reg);
        CHECK(res.kind == StageResult::Kind::Pass);
    }
    SUBCASE("tampered message is dropped") {
        std::vector<std::uint8_t> body{'G', 'E', 'T'};
        auto tagged = accel_reference(AcceleratorKind::Sha, AccelParams{}, body);
        tagged.payload.back() ^= 0xff;
        auto res = sockets.deliver_epoll(app, sid, EpollKind::EpollIn, tagged.payload, ctx, reg);
        CHECK(res.kind == StageResult::Kind::Drop);
    }
    SUBCASE("unknown socket") {
        try {
            sockets.deliver_epoll(app, 999, EpollKind::EpollIn, {}, ctx, reg);
            FAIL("expected UnknownSocket");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::UnknownSocket);
        }
    }
    SUBCASE("duplicate registration") {
        try {
            sockets.register_socket(conn);
            FAIL("expected DuplicateRegistration");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DuplicateRegistration);
        }
    }
}

TEST_CASE("five-tuple hashing and equality are value based") {
    FiveTuple a;
    a.src_ip = 1;
    a.dst_ip = 2;
    a.src_port = 3;
    a.dst_port = 4;
    a.proto = Proto::Udp;
    FiveTuple b = a;
    CHECK(a == b);
    CHECK(a.hash() == b.hash());
    b.src_port = 5;
    CHECK(a != b);
    CHECK(a.hash() != b.hash());
}
