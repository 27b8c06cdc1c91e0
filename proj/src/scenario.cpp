#include "nicpool/scenario.hpp"

#include <algorithm>

namespace nicpool {

ScenarioRunner::ScenarioRunner(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    registry_ = std::make_unique<UcfRegistry>();
    register_builtin_ucfs(*registry_);
    cluster_ = std::make_unique<Cluster>(Cluster::build(cfg_.cluster));
    fabric_ = std::make_unique<StateFabric>(cluster_.get());
    register_builtin_reducers(*fabric_);
    engine_ = std::make_unique<Engine>(cluster_.get(), fabric_.get(), registry_.get(), cfg_.engine);
    ProfileOptions popts;
    popts.warmup = cfg_.profile_warmup;
    popts.window = cfg_.profile_window;
    popts.probe_packets = cfg_.profile_probe_packets;
    popts.engine = cfg_.engine;
    controller_ = std::make_unique<Controller>(cluster_.get(), fabric_.get(), registry_.get(),
                                               engine_.get(), cfg_.controller, popts);
}

void ScenarioRunner::run() {
    std::set<AcceleratorKind> vocabulary;
    for (const auto& nd : cluster_->nics())
        for (auto k : nd.accel_kinds()) vocabulary.insert(k);
    // the vocabulary always covers the full closed set so validation errors
    // surface as placement failures, not config failures
    for (auto k : kAllAcceleratorKinds) vocabulary.insert(k);

    controller_->start(0);

    // submissions in config order; same-time order is admission order (FCFS)
    for (const auto& ac : cfg_.apps) {
        AppSpec spec = build_scenario_app(ac, *registry_, vocabulary);
        PerfTarget target;
        target.throughput_gbps = ac.target_gbps;
        target.latency_us = ac.latency_us;
        target.latency_sensitive = ac.latency_sensitive;
        DeployOptions opts;
        opts.failover = ac.failover;
        opts.mode = ac.mode;
        TrafficSpec traffic = ac.traffic;
        Controller* ctl = controller_.get();
        engine_->schedule(ac.submit_at, EventKind::Control,
                          [ctl, spec, target, traffic, opts] {
                              ctl->submit_app(spec, target, traffic, opts);
                          });
    }

    for (const auto& ev : cfg_.timeline) {
        Controller* ctl = controller_.get();
        Cluster* cl = cluster_.get();
        switch (ev.kind) {
            case TimelineEvent::Kind::SetTarget: {
                std::string app = ev.app;
                double gbps = ev.gbps;
                engine_->schedule(ev.at, EventKind::Control,
                                  [ctl, app, gbps] { ctl->set_target(app, gbps); });
                break;
            }
            case TimelineEvent::Kind::FailNic: {
                auto nic = cl->nic_by_name(ev.nic);
                if (!nic) throw_error(Errc::ValidationError, "timeline: unknown nic " + ev.nic);
                NicId id = *nic;
                engine_->schedule(ev.at, EventKind::Control, [ctl, id] { ctl->fail_nic(id); });
                break;
            }
            case TimelineEvent::Kind::RecoverNic: {
                auto nic = cl->nic_by_name(ev.nic);
                if (!nic) throw_error(Errc::ValidationError, "timeline: unknown nic " + ev.nic);
                NicId id = *nic;
                engine_->schedule(ev.at, EventKind::Control, [ctl, id] { ctl->recover_nic(id); });
                break;
            }
            case TimelineEvent::Kind::StopApp: {
                std::string app = ev.app;
                engine_->schedule(ev.at, EventKind::Control, [ctl, app] { ctl->stop_app(app); });
                break;
            }
        }
    }

    engine_->run_until(cfg_.run_length);
}

OrderedJson ScenarioRunner::report() const {
    return build_report(cfg_, *cluster_, *engine_, *controller_);
}

OrderedJson run_scenario_file(const std::string& config_path, const std::string& out_path,
                              std::optional<std::uint64_t> seed_override,
                              std::optional<double> bin_ms_override) {
    ScenarioConfig cfg = load_scenario_file(config_path);
    if (seed_override) {
        cfg.seed = *seed_override;
        cfg.engine.seed = *seed_override;
    }
    if (bin_ms_override) {
        cfg.bin_width = ms_to_time(*bin_ms_override);
        cfg.engine.bin_width = cfg.bin_width;
    }
    ScenarioRunner runner(std::move(cfg));
    runner.run();
    OrderedJson rep = runner.report();
    if (!out_path.empty()) write_report(rep, out_path);
    return rep;
}

}  // namespace nicpool
