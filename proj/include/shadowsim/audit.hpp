#pragma once

// Passive run-time invariant checker: pod identity uniqueness, service
// endpoint correctness, message conservation, side-effect suppression,
// and phase legality. Violations are data; the harness surfaces them.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "shadowsim/broker.hpp"
#include "shadowsim/cluster.hpp"
#include "shadowsim/workload.hpp"

namespace shadowsim {

enum class Phase {
    Pending,
    Checkpointing,
    Transferring,
    Restoring,
    Replaying,
    Finalizing,
    Completed,
    Failed
};

std::string to_string(Phase p);

struct Violation {
    double time_s = 0.0;
    std::string rule;
    std::string detail;
};

struct LossAudit {
    std::uint64_t published = 0;
    std::uint64_t applied_by_survivor = 0;
    std::vector<std::uint64_t> missing_seqs;
    std::uint64_t duplicate_applications = 0;
};

class AuditLedger {
  public:
    AuditLedger(const Cluster& cluster, const Broker& broker)
        : cluster_(&cluster), broker_(&broker) {}

    bool enabled = true;

    // Stream notes, wired into broker/consumer/cluster hooks.
    void note_pod_event(const std::string& pod, PodEvent ev, SimTime now);
    void note_publish(const Message& msg, int copies, SimTime now);
    void note_consume(const Message& msg, SimTime now);
    void note_purge(const Message& msg, SimTime now);
    void note_apply(const std::string& consumer, std::uint64_t seq,
                    bool duplicate, bool effect, ConsumerMode mode,
                    SimTime now);
    void note_phase(Phase from, Phase to, SimTime now);

    // Called after every event dispatch; cheap unless pod state changed.
    void check_event(SimTime now);

    // Terminal accounting. The survivor's applied set carries its whole
    // checkpoint lineage (snapshots copy the set), so missing seqs are
    // exactly published-minus-applied.
    LossAudit finalize(std::uint64_t published,
                       const ConsumerState& survivor) const;

    // Conservation: per Data seq, copies published = consumed + queued +
    // purged. Run at terminal time; appends violations on mismatch.
    void check_conservation(SimTime now);

    const std::vector<Violation>& violations() const { return violations_; }

  private:
    void add(SimTime now, const std::string& rule, const std::string& detail);
    void deep_check(SimTime now);

    struct SeqInfo {
        int copies_published = 0;
        int consumed = 0;
        int purged = 0;
        int effects = 0;
    };
    SeqInfo& seq_info(std::uint64_t seq);

    const Cluster* cluster_;
    const Broker* broker_;
    std::vector<SeqInfo> seqs_;  // indexed by seq (1-based)
    std::set<std::string> live_pods_;
    std::vector<Violation> violations_;
    bool dirty_ = true;
};

}  // namespace shadowsim
