#include "shadowsim/audit.hpp"

#include <algorithm>

namespace shadowsim {

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Pending: return "Pending";
        case Phase::Checkpointing: return "Checkpointing";
        case Phase::Transferring: return "Transferring";
        case Phase::Restoring: return "Restoring";
        case Phase::Replaying: return "Replaying";
        case Phase::Finalizing: return "Finalizing";
        case Phase::Completed: return "Completed";
        case Phase::Failed: return "Failed";
    }
    return "?";
}

void AuditLedger::add(SimTime now, const std::string& rule,
                      const std::string& detail) {
    violations_.push_back(Violation{now.seconds(), rule, detail});
}

AuditLedger::SeqInfo& AuditLedger::seq_info(std::uint64_t seq) {
    if (seqs_.size() <= seq) seqs_.resize(seq + 1);
    return seqs_[seq];
}

void AuditLedger::note_pod_event(const std::string& pod, PodEvent ev,
                                 SimTime now) {
    if (!enabled) return;
    dirty_ = true;
    switch (ev) {
        case PodEvent::Created:
            if (!live_pods_.insert(pod).second)
                add(now, "IdentityViolation",
                    "two live pods named " + pod);
            break;
        case PodEvent::Gone:
            live_pods_.erase(pod);
            break;
        default:
            break;
    }
}

void AuditLedger::note_publish(const Message& msg, int copies, SimTime now) {
    if (!enabled || !msg.is_data()) return;
    SeqInfo& info = seq_info(msg.seq);
    if (info.copies_published != 0)
        add(now, "SequenceReuse",
            "seq " + std::to_string(msg.seq) + " published twice");
    info.copies_published = copies;
}

void AuditLedger::note_consume(const Message& msg, SimTime) {
    if (!enabled || !msg.is_data()) return;
    seq_info(msg.seq).consumed++;
}

void AuditLedger::note_purge(const Message& msg, SimTime) {
    if (!enabled || !msg.is_data()) return;
    seq_info(msg.seq).purged++;
}

void AuditLedger::note_apply(const std::string& consumer, std::uint64_t seq,
                             bool duplicate, bool effect, ConsumerMode mode,
                             SimTime now) {
    if (!enabled) return;
    if (mode == ConsumerMode::Replay && effect)
        add(now, "SideEffectDuringReplay",
            consumer + " emitted a side effect for seq " +
                std::to_string(seq) + " in Replay mode");
    if (effect) {
        SeqInfo& info = seq_info(seq);
        info.effects++;
        if (info.effects > 1)
            add(now, "DuplicationViolation",
                "seq " + std::to_string(seq) +
                    " produced side effects more than once (" + consumer +
                    ")");
    }
    (void)duplicate;
}

void AuditLedger::note_phase(Phase from, Phase to, SimTime now) {
    if (!enabled) return;
    static const std::map<Phase, std::set<Phase>> edges = {
        {Phase::Pending, {Phase::Checkpointing, Phase::Failed}},
        {Phase::Checkpointing, {Phase::Transferring, Phase::Failed}},
        {Phase::Transferring, {Phase::Restoring, Phase::Failed}},
        {Phase::Restoring, {Phase::Replaying, Phase::Failed}},
        {Phase::Replaying, {Phase::Finalizing, Phase::Failed}},
        {Phase::Finalizing, {Phase::Completed, Phase::Failed}},
    };
    auto it = edges.find(from);
    if (it == edges.end() || it->second.count(to) == 0)
        add(now, "PhaseViolation",
            "illegal transition " + to_string(from) + " -> " + to_string(to));
}

void AuditLedger::check_event(SimTime now) {
    if (!enabled || !dirty_) return;
    dirty_ = false;
    deep_check(now);
}

void AuditLedger::deep_check(SimTime now) {
    // Identity: no two live pods share a name. The pod table is keyed by
    // name, so the event stream (note_pod_event) is the primary detector;
    // this pass cross-checks liveness bookkeeping.
    for (const auto& name : live_pods_) {
        if (!cluster_->pod_live(name))
            add(now, "IdentityBookkeeping",
                "pod " + name + " tracked live but not live in cluster");
    }

    // Endpoints: recompute from scratch and compare with the cluster's
    // own answer.
    for (const auto& [svc_name, svc] : cluster_->services()) {
        std::set<std::string> expect;
        for (const auto& [pname, p] : cluster_->pods()) {
            if (!p.live() || !p.ready) continue;
            bool match = !svc.selector.empty();
            for (const auto& [k, v] : svc.selector) {
                auto l = p.labels.find(k);
                if (l == p.labels.end() || l->second != v) {
                    match = false;
                    break;
                }
            }
            if (match) expect.insert(pname);
        }
        if (expect != cluster_->service_endpoints(svc_name))
            add(now, "EndpointViolation",
                "service " + svc_name + " endpoints out of sync");
    }
}

void AuditLedger::check_conservation(SimTime now) {
    if (!enabled) return;
    std::map<std::uint64_t, int> queued;
    for (const auto& qname : broker_->queue_names()) {
        for (const auto& m : broker_->queue(qname).messages)
            if (m.is_data()) queued[m.seq]++;
    }
    for (std::uint64_t seq = 1; seq < seqs_.size(); ++seq) {
        const SeqInfo& info = seqs_[seq];
        int q = queued.count(seq) ? queued.at(seq) : 0;
        if (info.copies_published != info.consumed + info.purged + q)
            add(now, "ConservationViolation",
                "seq " + std::to_string(seq) + ": published " +
                    std::to_string(info.copies_published) + " != consumed " +
                    std::to_string(info.consumed) + " + queued " +
                    std::to_string(q) + " + purged " +
                    std::to_string(info.purged));
    }
}

LossAudit AuditLedger::finalize(std::uint64_t published,
                                const ConsumerState& survivor) const {
    LossAudit out;
    out.published = published;
    out.applied_by_survivor = survivor.applied.size();
    for (std::uint64_t seq = 1; seq <= published; ++seq) {
        if (survivor.applied.count(seq) == 0) out.missing_seqs.push_back(seq);
    }
    for (std::uint64_t seq = 1; seq < seqs_.size(); ++seq) {
        if (seqs_[seq].effects > 1)
            out.duplicate_applications += seqs_[seq].effects - 1;
    }
    return out;
}

}  // namespace shadowsim
