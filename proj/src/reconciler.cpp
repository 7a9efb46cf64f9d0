#include "shadowsim/reconciler.hpp"

#include <algorithm>

namespace shadowsim {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Sequential: return "Sequential";
        case Strategy::ShadowPod: return "ShadowPod";
        case Strategy::ShadowPodSwap: return "ShadowPodSwap";
    }
    return "?";
}

double effective_cutoff_s(const MigrationSpecFields& spec) {
    if (!spec.cutoff_formula_mode) return spec.replay_cutoff_s;
    if (spec.lambda_estimate <= 0.0 || spec.mu_target_estimate <= 0.0)
        return spec.replay_cutoff_s;
    double bound = spec.replay_cutoff_s * spec.mu_target_estimate /
                   spec.lambda_estimate;
    return std::min(spec.replay_cutoff_s, bound);
}

Strategy detect_strategy(const PodRecord& pod,
                         std::optional<Strategy> requested) {
    if (requested) return *requested;
    if (pod.owner && pod.owner->kind == OwnerRef::Kind::StatefulSet)
        return Strategy::Sequential;
    return Strategy::ShadowPod;
}

Reconciler::Reconciler(Simulation& sim, Cluster& cluster, Broker& broker,
                       WorkloadRegistry& workloads,
                       CheckpointService& checkpoints,
                       MigrationSpecFields spec, MigrationTimings timings)
    : sim_(sim), cluster_(cluster), broker_(broker), workloads_(workloads),
      checkpoints_(checkpoints), spec_(std::move(spec)),
      timings_(std::move(timings)), backoff_(timings_.backoff_base) {}

void Reconciler::create() {
    status_.created_at = sim_.now();
    status_.phase_entered = sim_.now();
    status_.effective_cutoff_s = effective_cutoff_s(spec_);
    nudge();
}

std::string Reconciler::replay_target_pod() const {
    return status_.effective_strategy == Strategy::Sequential
               ? spec_.source_pod
               : shadow_pod_name();
}

std::string Reconciler::statefulset_name() const {
    if (!status_.cached_owner ||
        status_.cached_owner->kind != OwnerRef::Kind::StatefulSet)
        throw ClusterError("source pod is not StatefulSet-owned");
    return status_.cached_owner->controller_name;
}

std::string Reconciler::deployment_name() const {
    if (!status_.cached_owner ||
        status_.cached_owner->kind != OwnerRef::Kind::Deployment)
        throw ClusterError("source pod is not Deployment-owned");
    return status_.cached_owner->controller_name;
}

Duration Reconciler::next_backoff() {
    Duration cur = backoff_;
    backoff_ = Duration{std::min(backoff_.us * 2, timings_.backoff_cap.us)};
    return cur;
}

void Reconciler::schedule_reconcile(Duration delay, bool immediate) {
    if (pending_reconcile_) {
        if (pending_is_immediate_) return;  // already firing now
        sim_.cancel(*pending_reconcile_);
        pending_reconcile_.reset();
    }
    pending_is_immediate_ = immediate && delay.us == 0;
    pending_reconcile_ = sim_.schedule_in(delay, [this] {
        pending_reconcile_.reset();
        pending_is_immediate_ = false;
        reconcile();
    });
}

void Reconciler::nudge() {
    if (status_.terminal()) return;
    schedule_reconcile(Duration{}, true);
}

void Reconciler::advance_to(Phase next) {
    Phase from = status_.phase;
    status_.phase_timings[from] = sim_.now() - status_.phase_entered;
    status_.phase = next;
    status_.phase_entered = sim_.now();
    backoff_ = timings_.backoff_base;
    if (next == Phase::Completed) status_.completed_at = sim_.now();
    if (on_phase_transition) on_phase_transition(from, next, sim_.now());
}

void Reconciler::fail(const std::string& reason) {
    if (status_.terminal()) return;
    if (cutoff_event_) {
        sim_.cancel(*cutoff_event_);
        cutoff_event_.reset();
    }
    if (fence_timeout_event_) {
        sim_.cancel(*fence_timeout_event_);
        fence_timeout_event_.reset();
    }
    status_.failure_reason = reason;
    Phase from = status_.phase;
    status_.phase = Phase::Failed;
    if (on_phase_transition) on_phase_transition(from, Phase::Failed, sim_.now());
}

void Reconciler::maybe_inject(Phase phase) {
    if (fault_plan.fail_once_in && *fault_plan.fail_once_in == phase) {
        fault_plan.fail_once_in.reset();
        throw TransientFault(to_string(phase));
    }
}

void Reconciler::reconcile() {
    if (status_.terminal() || in_reconcile_) return;
    in_reconcile_ = true;
    // Phase chaining: keep dispatching while handlers complete
    // synchronously within this invocation.
    for (;;) {
        if (status_.terminal()) break;
        Step step{Step::Kind::WaitNudge, {}};
        bool transient = false;
        try {
            step = dispatch();
        } catch (const TransientFault&) {
            transient = true;
        } catch (const std::exception& e) {
            fail(e.what());
            break;
        }
        if (transient) {
            schedule_reconcile(next_backoff(), false);
            break;
        }
        if (step.kind == Step::Kind::Advanced) continue;
        if (step.kind == Step::Kind::Requeue)
            schedule_reconcile(step.delay, false);
        else if (step.kind == Step::Kind::Poll)
            schedule_reconcile(next_backoff(), false);
        break;  // WaitNudge: an async completion will nudge us
    }
    in_reconcile_ = false;
}

Reconciler::Step Reconciler::dispatch() {
    switch (status_.phase) {
        case Phase::Pending: return handle_pending();
        case Phase::Checkpointing: return handle_checkpointing();
        case Phase::Transferring: return handle_transferring();
        case Phase::Restoring: return handle_restoring();
        case Phase::Replaying: return handle_replaying();
        case Phase::Finalizing: return handle_finalizing();
        case Phase::Completed:
        case Phase::Failed: break;
    }
    return wait_nudge();
}

Reconciler::Step Reconciler::handle_pending() {
    const PodRecord* pod = cluster_.find_pod(spec_.source_pod);
    if (!pod || !pod->live()) {
        fail("source pod not found: " + spec_.source_pod);
        return wait_nudge();
    }
    if (pod->lifecycle != PodLifecycle::Running || !pod->ready)
        return poll();  // not serving yet; poll with backoff
    if (!cluster_.has_node(spec_.target_node)) {
        fail("unknown target node: " + spec_.target_node);
        return wait_nudge();
    }

    status_.cached_labels = pod->labels;
    status_.cached_owner = pod->owner;
    status_.cached_node = pod->node;
    status_.cached_image = pod->image_ref;
    status_.effective_strategy = detect_strategy(*pod, spec_.strategy);

    if (status_.effective_strategy == Strategy::Sequential &&
        (!pod->owner || pod->owner->kind != OwnerRef::Kind::StatefulSet)) {
        fail("Sequential strategy requires a StatefulSet-owned source");
        return wait_nudge();
    }
    if (status_.effective_strategy == Strategy::ShadowPodSwap &&
        (!pod->owner || pod->owner->kind != OwnerRef::Kind::StatefulSet)) {
        fail("identity swap requires a StatefulSet-owned source");
        return wait_nudge();
    }
    maybe_inject(Phase::Pending);
    advance_to(Phase::Checkpointing);
    return advanced();
}

Reconciler::Step Reconciler::handle_checkpointing() {
    if (!status_.replay_queue_bound) {
        broker_.declare_queue(spec_.queues.replay);
        broker_.bind(spec_.queues.exchange, spec_.queues.replay);
        status_.replay_queue_bound = true;
        status_.replay_bind_time = sim_.now();
        return requeue(timings_.broker_op_latency);
    }
    if (!status_.checkpoint_started) {
        status_.checkpoint_started = true;
        status_.checkpoint_id = checkpoints_.checkpoint_pod(
            spec_.source_pod, sim_.sample(timings_.checkpoint_model, "checkpoint"),
            [this](const std::string&) { nudge(); });
        maybe_inject(Phase::Checkpointing);
        return wait_nudge();
    }
    maybe_inject(Phase::Checkpointing);
    if (!checkpoints_.available(status_.checkpoint_id)) return wait_nudge();
    advance_to(Phase::Transferring);
    return advanced();
}

Reconciler::Step Reconciler::handle_transferring() {
    if (!status_.transfer_started) {
        status_.transfer_started = true;
        checkpoints_.transfer(
            status_.checkpoint_id, spec_.transfer_mode, spec_.target_node,
            sim_.sample(timings_.transfer_model, "transfer"),
            [this](const std::string& ref) {
                status_.image_ref = ref;
                nudge();
            });
        maybe_inject(Phase::Transferring);
        return wait_nudge();
    }
    maybe_inject(Phase::Transferring);
    if (status_.image_ref.empty()) return wait_nudge();
    advance_to(Phase::Restoring);
    return advanced();
}

Reconciler::Step Reconciler::handle_restoring() {
    if (status_.effective_strategy == Strategy::Sequential) {
        switch (status_.seq_step) {
            case 0:
                cluster_.scale_statefulset(statefulset_name(), 0,
                                           timings_.source_drain_grace);
                status_.seq_step = 1;
                maybe_inject(Phase::Restoring);
                return wait_nudge();  // wait for the source to be Gone
            case 1: {
                maybe_inject(Phase::Restoring);
                if (cluster_.pod_live(spec_.source_pod)) return wait_nudge();
                Duration remainder =
                    seconds(timings_.sequential_restore_total_s) -
                    timings_.source_drain_grace;
                if (remainder.us <= 0)
                    throw ContractViolation(
                        "sequential restore total must exceed drain grace");
                auto& ss = cluster_.statefulset(statefulset_name());
                ss.pod_template.labels = status_.cached_labels;
                ss.pod_template.image_ref = status_.image_ref;
                ss.pod_template.node = spec_.target_node;
                ss.pod_template.require_local_image = true;
                ss.pod_template.startup_delay = remainder;
                cluster_.scale_statefulset(statefulset_name(), 1);
                checkpoints_.create_restored_consumer(status_.checkpoint_id,
                                                      spec_.source_pod,
                                                      timings_.consumer_cfg);
                status_.seq_step = 2;
                return wait_nudge();
            }
            case 2: {
                const PodRecord* p = cluster_.find_pod(spec_.source_pod);
                if (!p || !p->ready) return wait_nudge();
                advance_to(Phase::Replaying);
                return advanced();
            }
            default:
                throw ContractViolation("bad sequential restore step");
        }
    }

    // ShadowPod / ShadowPodSwap: the shadow coexists with the source.
    if (!status_.restore_issued) {
        status_.restore_issued = true;
        PodSpec spec;
        spec.name = shadow_pod_name();
        spec.labels = status_.cached_labels;  // same app labels, no owner
        spec.node = spec_.target_node;
        spec.ready_delay = sim_.sample(timings_.restore_model, "restore");
        checkpoints_.restore_pod(status_.checkpoint_id, spec, std::nullopt,
                                 timings_.consumer_cfg);
        maybe_inject(Phase::Restoring);
        return wait_nudge();
    }
    maybe_inject(Phase::Restoring);
    const PodRecord* shadow = cluster_.find_pod(shadow_pod_name());
    if (!shadow || !shadow->ready) return wait_nudge();
    advance_to(Phase::Replaying);
    return advanced();
}

Reconciler::Step Reconciler::handle_replaying() {
    if (!status_.start_replay_sent) {
        status_.start_replay_sent = true;
        status_.replay_started = sim_.now();
        Consumer* target = workloads_.find(replay_target_pod());
        if (!target) throw ClusterError("replay target consumer missing");
        target->deliver_control(
            Message::Kind::StartReplay, spec_.queues.replay,
            timings_.consumer_resume_delay + timings_.replay_start_extra);
        Duration cutoff = seconds(status_.effective_cutoff_s);
        cutoff_event_ = sim_.schedule_in(cutoff, [this] {
            cutoff_event_.reset();
            if (status_.phase == Phase::Replaying) {
                status_.cutoff_fired = true;
                nudge();
            }
        });
        maybe_inject(Phase::Replaying);
        return poll();
    }
    maybe_inject(Phase::Replaying);
    if (status_.cutoff_fired) {
        advance_to(Phase::Finalizing);
        return advanced();
    }
    if (broker_.depth(spec_.queues.replay) == 0) {
        if (cutoff_event_) {
            sim_.cancel(*cutoff_event_);
            cutoff_event_.reset();
        }
        advance_to(Phase::Finalizing);
        return advanced();
    }
    return poll();
}

Reconciler::Step Reconciler::handle_finalizing() {
    switch (status_.effective_strategy) {
        case Strategy::Sequential: return finalize_sequential();
        case Strategy::ShadowPod:
            return status_.cached_owner &&
                           status_.cached_owner->kind ==
                               OwnerRef::Kind::Deployment
                       ? finalize_deployment()
                       : finalize_shadow_statefulset();
        case Strategy::ShadowPodSwap: return finalize_swap();
    }
    throw ContractViolation("unknown strategy");
}

// The survivor drains any replay residue in Replay mode, then meets the
// in-band EndReplay marker and switches to the primary queue. A non-empty
// replay queue (cutoff runs) stays alive past Completed and is cleaned up
// once drained.
Reconciler::Step Reconciler::finalize_sequential() {
    switch (status_.fin_step) {
        case 0:
            broker_.unbind(spec_.queues.exchange, spec_.queues.replay);
            status_.fin_step = 1;
            maybe_inject(Phase::Finalizing);
            return requeue(timings_.broker_op_latency);
        case 1: {
            maybe_inject(Phase::Finalizing);
            Consumer* survivor = workloads_.find(spec_.source_pod);
            if (!survivor) throw ClusterError("survivor consumer missing");
            survivor->set_switch_target(spec_.queues.primary);
            broker_.enqueue(spec_.queues.replay,
                            Message{0, sim_.now(), Message::Kind::EndReplay});
            status_.fin_step = 2;
            return requeue(timings_.broker_op_latency);
        }
        case 2:
            advance_to(Phase::Completed);
            return advanced();
        default:
            throw ContractViolation("bad finalize step");
    }
}

Reconciler::Step Reconciler::finalize_deployment() {
    switch (status_.fin_step) {
        case 0:
            broker_.unbind(spec_.queues.exchange, spec_.queues.replay);
            status_.fin_step = 1;
            maybe_inject(Phase::Finalizing);
            return requeue(timings_.broker_op_latency);
        case 1: {
            maybe_inject(Phase::Finalizing);
            Consumer* shadow = workloads_.find(shadow_pod_name());
            if (!shadow) throw ClusterError("shadow consumer missing");
            shadow->set_switch_target(spec_.queues.primary);
            broker_.enqueue(spec_.queues.replay,
                            Message{0, sim_.now(), Message::Kind::EndReplay});
            status_.fin_step = 2;
            return requeue(timings_.broker_op_latency);
        }
        case 2:
            cluster_.delete_pod(spec_.source_pod,
                                timings_.source_drain_grace);
            status_.fin_step = 3;
            return requeue(timings_.api_op_latency);
        case 3:
            cluster_.patch_deployment_affinity(deployment_name(),
                                               spec_.target_node);
            status_.fin_step = 4;
            return requeue(timings_.api_op_latency);
        case 4:
            if (broker_.has_queue(spec_.queues.replay) &&
                broker_.depth(spec_.queues.replay) == 0) {
                broker_.delete_queue(spec_.queues.replay);
            }
            advance_to(Phase::Completed);
            return advanced();
        default:
            throw ContractViolation("bad finalize step");
    }
}

Reconciler::Step Reconciler::finalize_shadow_statefulset() {
    switch (status_.fin_step) {
        case 0:
            broker_.unbind(spec_.queues.exchange, spec_.queues.replay);
            status_.fin_step = 1;
            maybe_inject(Phase::Finalizing);
            return requeue(timings_.broker_op_latency);
        case 1: {
            maybe_inject(Phase::Finalizing);
            Consumer* shadow = workloads_.find(shadow_pod_name());
            if (!shadow) throw ClusterError("shadow consumer missing");
            shadow->set_switch_target(spec_.queues.primary);
            broker_.enqueue(spec_.queues.replay,
                            Message{0, sim_.now(), Message::Kind::EndReplay});
            status_.fin_step = 2;
            return requeue(timings_.broker_op_latency);
        }
        case 2: {
            // Scale down by one; the controller removes the highest
            // ordinal (the source), while the shadow keeps serving.
            auto& ss = cluster_.statefulset(statefulset_name());
            cluster_.scale_statefulset(ss.name, ss.replicas - 1,
                                       timings_.source_drain_grace);
            status_.fin_step = 3;
            return requeue(timings_.api_op_latency);
        }
        case 3:
            if (broker_.has_queue(spec_.queues.replay) &&
                broker_.depth(spec_.queues.replay) == 0) {
                broker_.delete_queue(spec_.queues.replay);
            }
            advance_to(Phase::Completed);
            return advanced();
        default:
            throw ContractViolation("bad finalize step");
    }
}

// Identity swap: re-checkpoint the shadow (binding a fresh swap queue at
// the snapshot instant and moving any replay residue into it), hand the
// primary queue to the shadow, replace it with a StatefulSet-owned pod
// restored from the re-checkpoint, and fence the handoff.
Reconciler::Step Reconciler::finalize_swap() {
    const std::string& swap_q = spec_.queues.swap;
    const std::string& buffer_q = spec_.queues.buffer;
    switch (status_.fin_step) {
        case 0:
            broker_.declare_queue(swap_q);
            broker_.bind(spec_.queues.exchange, swap_q);
            status_.fin_step = 1;
            maybe_inject(Phase::Finalizing);
            return requeue(timings_.broker_op_latency);
        case 1: {
            // Local re-checkpoint. The snapshot and the queue cutover are
            // consistent: everything the shadow has not applied sits in
            // the replay residue, which moves onto the swap queue.
            Consumer* shadow = workloads_.find(shadow_pod_name());
            if (!shadow) throw ClusterError("shadow consumer missing");
            status_.swap_checkpoint_started = true;
            status_.swap_checkpoint_id = checkpoints_.checkpoint_pod(
                shadow_pod_name(),
                sim_.sample(timings_.checkpoint_model, "swap-checkpoint"),
                [this](const std::string&) { nudge(); });
            shadow->detach();
            broker_.unbind(spec_.queues.exchange, spec_.queues.replay);
            broker_.drain_to(spec_.queues.replay, swap_q);
            broker_.delete_queue(spec_.queues.replay);
            status_.fin_step = 2;
            maybe_inject(Phase::Finalizing);
            return wait_nudge();
        }
        case 2: {
            if (!checkpoints_.available(status_.swap_checkpoint_id))
                return wait_nudge();
            status_.swap_image_ref =
                checkpoints_.install_local(status_.swap_checkpoint_id);
            // Quiesce the source and let the shadow take over the primary
            // queue while the swap proceeds.
            workloads_.detach_for(spec_.source_pod);
            Consumer* shadow = workloads_.find(shadow_pod_name());
            if (!shadow) throw ClusterError("shadow consumer missing");
            shadow->deliver_control(Message::Kind::EndReplay,
                                    spec_.queues.primary);
            status_.fin_step = 3;
            return requeue(timings_.broker_op_latency);
        }
        case 3:
            // The source was quiesced above, so a short grace suffices;
            // the replacement cannot be created until the name frees up.
            cluster_.scale_statefulset(statefulset_name(), 0,
                                       timings_.swap_termination_grace);
            status_.fin_step = 4;
            return wait_nudge();
        case 4: {
            if (cluster_.pod_live(spec_.source_pod)) return wait_nudge();
            PodSpec spec;
            spec.name = spec_.source_pod;  // original ordinal name
            spec.labels = status_.cached_labels;
            spec.node = spec_.target_node;
            spec.ready_delay = sim_.sample(timings_.restore_model, "swap-restore");
            checkpoints_.restore_pod(status_.swap_checkpoint_id, spec,
                                     std::nullopt, timings_.consumer_cfg);
            status_.fin_step = 5;
            return wait_nudge();
        }
        case 5: {
            const PodRecord* p = cluster_.find_pod(spec_.source_pod);
            if (!p || !p->ready) return wait_nudge();
            // Restore replicas; the controller adopts the name-matching,
            // label-matching, unowned replacement.
            cluster_.scale_statefulset(statefulset_name(), 1);
            if (!cluster_.pod(spec_.source_pod).owner)
                throw AdoptionRefused(spec_.source_pod +
                                      " was not adopted on scale-up");
            status_.fin_step = 6;
            return requeue(timings_.api_op_latency);
        }
        case 6: {
            Consumer* replacement = workloads_.find(spec_.source_pod);
            if (!replacement)
                throw ClusterError("replacement consumer missing");
            replacement->deliver_control(Message::Kind::StartReplay, swap_q,
                                         timings_.consumer_resume_delay);
            status_.fin_step = 7;
            return requeue(timings_.broker_op_latency);
        }
        case 7:
            // ExchangeFence step 1: declare and bind the buffer.
            broker_.declare_queue(buffer_q);
            broker_.bind(spec_.queues.exchange, buffer_q);
            status_.fin_step = 8;
            return requeue(timings_.broker_op_latency);
        case 8: {
            // Step 2: unbind primary and swap; new messages are fenced
            // into the buffer.
            broker_.unbind(spec_.queues.exchange, spec_.queues.primary);
            broker_.unbind(spec_.queues.exchange, swap_q);
            status_.fence_opened = sim_.now();
            fence_timeout_event_ = sim_.schedule_in(
                timings_.fence_drain_timeout, [this] {
                    fence_timeout_event_.reset();
                    if (status_.phase == Phase::Finalizing &&
                        status_.fin_step == 9)
                        fail("ExchangeFence drain timeout");
                });
            status_.fin_step = 9;
            return poll();
        }
        case 9:
            // Step 3: both queues drain to zero behind the fence.
            if (broker_.depth(spec_.queues.primary) > 0 ||
                broker_.depth(swap_q) > 0)
                return poll();
            if (fence_timeout_event_) {
                sim_.cancel(*fence_timeout_event_);
                fence_timeout_event_.reset();
            }
            status_.fin_step = 10;
            return requeue(timings_.broker_op_latency);
        case 10:
            // Step 4: terminate the shadow...
            cluster_.delete_pod(shadow_pod_name(),
                                timings_.swap_termination_grace);
            status_.fin_step = 11;
            return requeue(timings_.api_op_latency);
        case 11:
            // ...rebind the primary queue...
            broker_.bind(spec_.queues.exchange, spec_.queues.primary);
            status_.fin_step = 12;
            return requeue(timings_.broker_op_latency);
        case 12:
            // ...and deliver the fenced messages to the replacement.
            status_.fence_buffered = broker_.drain_to(buffer_q,
                                                      spec_.queues.primary);
            status_.fence_closed = sim_.now();
            broker_.delete_queue(buffer_q);
            status_.fin_step = 13;
            return requeue(timings_.broker_op_latency);
        case 13: {
            Consumer* replacement = workloads_.find(spec_.source_pod);
            if (!replacement)
                throw ClusterError("replacement consumer missing");
            replacement->deliver_control(Message::Kind::EndReplay,
                                         spec_.queues.primary);
            if (broker_.has_queue(swap_q) && broker_.depth(swap_q) == 0)
                broker_.delete_queue(swap_q);
            advance_to(Phase::Completed);
            return advanced();
        }
        default:
            throw ContractViolation("bad swap finalize step");
    }
}

}  // namespace shadowsim
