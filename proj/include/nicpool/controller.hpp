#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nicpool/engine.hpp"
#include "nicpool/profiler.hpp"

namespace nicpool {

enum class DeployStatus { Pending, Running, BestEffort, Failed, Stopped };

const char* deploy_status_name(DeployStatus s);

struct DeployOptions {
    bool failover = false;
    PlacementMode mode = PlacementMode::FineGrained;
};

struct AppDeployment {
    AppSpec spec;
    PerfTarget target;
    DeployOptions opts;
    TrafficSpec traffic;

    Profile profile;
    ReplicationPlan plan;
    double measured_t_gbps = 0.0;
    AllocationPlan alloc;
    Placement placement;

    DeployStatus status = DeployStatus::Pending;
    std::string status_reason;
    std::optional<NicId> backup_nic;
    double min_latency_us = 0.0;

    // Packets mirror to the backup continuously; each sync prunes the
    // mirror, so a packet is replayable iff it entered at or after the
    // last sync. Flow state ships as dirty diffs at each sync.
    struct BackupState {
        std::map<NicId, StateFabric::TableSnapshot> tables;
        SimTime last_sync = -1;
    };
    BackupState backup;
    std::map<NicId, std::vector<Packet>> pending_replay;  // died on nic, cached at backup
};

struct ControllerConfig {
    SimTime check_interval = 100 * kMsec;   // health checks via connection requests
    SimTime sync_interval = 100 * kMsec;    // flow-state / packet replication to backups
    SimTime recovery_setup = 50 * kMsec;    // replacement pipeline launch time
};

struct ScalingOutcome {
    bool noop = false;
    bool best_effort = false;
    int groups_added = 0;
    int groups_grown = 0;
    int groups_shrunk = 0;
    SimTime applied_at = 0;
};

struct RecoveryReport {
    NicId failed_nic = -1;
    SimTime detected_at = 0;
    struct PerApp {
        std::string app_id;
        std::int64_t lost = 0;
        std::int64_t replayed = 0;
        bool recovered = false;
        std::string reason;
    };
    std::vector<PerApp> apps;
};

struct ControlEvent {
    SimTime at = 0;
    std::string kind;
    std::string detail;
};

// Global controller: FCFS admission, profile -> plan -> place -> run,
// periodic state sync, adaptive scaling, and failover via backup replicas.
class Controller {
public:
    Controller(Cluster* cluster, StateFabric* fabric, const UcfRegistry* registry, Engine* engine,
               ControllerConfig cfg, ProfileOptions profile_opts);

    // schedules the recurring health/sync tick
    void start(SimTime first_tick);

    AppDeployment& submit_app(const AppSpec& spec, const PerfTarget& target,
                              const TrafficSpec& traffic, const DeployOptions& opts = {});
    ScalingOutcome set_target(const std::string& app_id, double new_gbps);
    void stop_app(const std::string& app_id);

    void fail_nic(NicId nic);     // scenario event at failure time
    void recover_nic(NicId nic);  // scenario event; retries Failed deployments

    void sync_tick(SimTime now);
    RecoveryReport handle_failure(NicId nic, SimTime now);

    AppDeployment& deployment(const std::string& app_id);
    const std::map<std::string, AppDeployment>& deployments() const { return deployments_; }
    const std::vector<std::string>& admission_order() const { return admission_order_; }
    const std::vector<ControlEvent>& events() const { return events_; }
    const std::vector<RecoveryReport>& recoveries() const { return recoveries_; }

private:
    void log(const std::string& kind, const std::string& detail);
    std::optional<NicId> choose_backup(const AppSpec& spec, const Placement& placement) const;
    void reclaim_placement(Placement& placement);
    bool deploy(AppDeployment& dep);  // place + instantiate + traffic

    Cluster* cluster_;
    StateFabric* fabric_;
    const UcfRegistry* registry_;
    Engine* engine_;
    ControllerConfig cfg_;
    ProfileOptions profile_opts_;

    std::map<std::string, AppDeployment> deployments_;
    std::vector<std::string> admission_order_;
    std::map<NicId, SimTime> last_ok_;
    std::set<NicId> failed_unhandled_;
    std::vector<ControlEvent> events_;
    std::vector<RecoveryReport> recoveries_;
};

}  // namespace nicpool
