#pragma once

// The migration operator core: a seven-phase idempotent state machine
// with phase chaining and exponential polling backoff, three strategies
// (Sequential, ShadowPod, ShadowPodSwap), the replay cutoff, and the
// identity swap with its exchange fence. Handlers tolerate repeated
// invocation; progress lives in status flags and step cursors.

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "shadowsim/audit.hpp"
#include "shadowsim/broker.hpp"
#include "shadowsim/checkpoint.hpp"
#include "shadowsim/cluster.hpp"
#include "shadowsim/sim.hpp"
#include "shadowsim/workload.hpp"

namespace shadowsim {

enum class Strategy { Sequential, ShadowPod, ShadowPodSwap };

std::string to_string(Strategy s);

struct QueueNames {
    std::string exchange = "events";
    std::string primary = "primary";
    std::string replay = "replay";
    std::string swap = "swap";
    std::string buffer = "buffer";
};

struct MigrationSpecFields {
    std::string source_pod;
    std::string target_node;
    std::optional<Strategy> strategy;  // nullopt = auto-detect
    TransferKind transfer_mode = TransferKind::RegistryJob;
    QueueNames queues;
    double replay_cutoff_s = 120.0;
    // Formula mode derives the effective cutoff from estimated rates:
    // T_cutoff = T_replay_max * mu_target / lambda, capped at T_replay_max.
    bool cutoff_formula_mode = false;
    double mu_target_estimate = 0.0;
    double lambda_estimate = 0.0;
};

double effective_cutoff_s(const MigrationSpecFields& spec);

// Requested strategy wins; otherwise the owner kind decides
// (StatefulSet -> Sequential, Deployment -> ShadowPod, unowned ->
// ShadowPod).
Strategy detect_strategy(const PodRecord& pod,
                         std::optional<Strategy> requested);

struct MigrationTimings {
    DurationModel checkpoint_model = DurationModel::constant(0.34);
    DurationModel transfer_model = DurationModel::constant(5.35);
    DurationModel restore_model = DurationModel::constant(2.89);
    double sequential_restore_total_s = 38.41;  // composite stop-recreate
    Duration source_drain_grace = seconds(7.4);
    Duration swap_termination_grace = seconds(3.5);
    Duration consumer_resume_delay = seconds(1.0);
    Duration replay_start_extra = seconds(0.0);  // per-config knob
    Duration api_op_latency = seconds(0.010);
    Duration broker_op_latency = seconds(0.010);
    Duration backoff_base = seconds(0.25);
    Duration backoff_cap = seconds(4.0);
    Duration fence_drain_timeout = seconds(120.0);
    ConsumerConfig consumer_cfg{};
};

struct MigrationStatus {
    Phase phase = Phase::Pending;
    std::map<Phase, Duration> phase_timings;
    SimTime created_at{};
    SimTime phase_entered{};
    std::optional<SimTime> completed_at;
    Strategy effective_strategy = Strategy::ShadowPod;
    std::string failure_reason;

    // Cached source pod metadata.
    Labels cached_labels;
    std::optional<OwnerRef> cached_owner;
    std::string cached_node;
    std::string cached_image;

    // Progress flags; handlers re-enter safely by consulting these.
    bool replay_queue_bound = false;
    std::string checkpoint_id;
    bool checkpoint_started = false;
    std::string image_ref;
    bool transfer_started = false;
    bool restore_issued = false;
    int seq_step = 0;  // Sequential restore sub-step
    bool start_replay_sent = false;
    bool cutoff_fired = false;
    int fin_step = 0;  // finalize sub-step cursor
    std::string swap_checkpoint_id;
    bool swap_checkpoint_started = false;
    std::string swap_image_ref;

    // Telemetry for oracle cross-checks and reports.
    SimTime replay_bind_time{};
    SimTime replay_started{};
    double effective_cutoff_s = 0.0;
    std::optional<SimTime> fence_opened;
    std::optional<SimTime> fence_closed;
    int fence_buffered = 0;

    bool terminal() const {
        return phase == Phase::Completed || phase == Phase::Failed;
    }
};

// Transient handler fault for retry testing; reconcile requeues instead
// of failing the migration.
struct TransientFault : std::runtime_error {
    explicit TransientFault(const std::string& where)
        : std::runtime_error("transient fault in " + where) {}
};

struct FaultPlan {
    std::optional<Phase> fail_once_in;
};

class Reconciler {
  public:
    Reconciler(Simulation& sim, Cluster& cluster, Broker& broker,
               WorkloadRegistry& workloads, CheckpointService& checkpoints,
               MigrationSpecFields spec, MigrationTimings timings);

    // Creates the resource and schedules the first reconcile now.
    void create();

    // Watch-style trigger: cancels the pending poll and reconciles at the
    // current instant (coalesced).
    void nudge();

    const MigrationSpecFields& spec() const { return spec_; }
    const MigrationStatus& status() const { return status_; }
    const MigrationTimings& timings() const { return timings_; }

    std::string shadow_pod_name() const { return spec_.source_pod + "-shadow"; }
    // The consumer that replays the secondary queue for this strategy.
    std::string replay_target_pod() const;

    FaultPlan fault_plan;

    std::function<void(Phase, Phase, SimTime)> on_phase_transition;

    // Exposed for direct-drive tests.
    void reconcile();

  private:
    struct Step {
        enum class Kind { Advanced, WaitNudge, Requeue, Poll };
        Kind kind;
        Duration delay{};
    };
    static Step advanced() { return {Step::Kind::Advanced, {}}; }
    static Step wait_nudge() { return {Step::Kind::WaitNudge, {}}; }
    static Step requeue(Duration d) { return {Step::Kind::Requeue, d}; }
    static Step poll() { return {Step::Kind::Poll, {}}; }

    Step dispatch();
    Step handle_pending();
    Step handle_checkpointing();
    Step handle_transferring();
    Step handle_restoring();
    Step handle_replaying();
    Step handle_finalizing();
    Step finalize_sequential();
    Step finalize_deployment();
    Step finalize_shadow_statefulset();
    Step finalize_swap();

    void advance_to(Phase next);
    void fail(const std::string& reason);
    void maybe_inject(Phase phase);
    void schedule_reconcile(Duration delay, bool is_poll);
    Duration next_backoff();
    std::string statefulset_name() const;
    std::string deployment_name() const;
    Duration transfer_latency() const;

    Simulation& sim_;
    Cluster& cluster_;
    Broker& broker_;
    WorkloadRegistry& workloads_;
    CheckpointService& checkpoints_;
    MigrationSpecFields spec_;
    MigrationTimings timings_;
    MigrationStatus status_;

    Duration backoff_{};
    std::optional<EventId> pending_reconcile_;
    bool pending_is_immediate_ = false;
    std::optional<EventId> cutoff_event_;
    std::optional<EventId> fence_timeout_event_;
    bool in_reconcile_ = false;
};

}  // namespace shadowsim
