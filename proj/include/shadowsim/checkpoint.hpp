#pragma once

// Checkpoint/restore and transfer paths as timed operations. An archive
// snapshots consumer state at the pause instant; restores initialize a
// consumer from that snapshot, and the control-queue identity of the
// restored consumer comes from the actual pod name, never the captured
// hostname.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "shadowsim/cluster.hpp"
#include "shadowsim/sim.hpp"
#include "shadowsim/workload.hpp"

namespace shadowsim {

struct PodNotRunning : ClusterError {
    explicit PodNotRunning(const std::string& pod)
        : ClusterError("pod not running with a consumer: " + pod) {}
};
struct AgentMissing : ClusterError {
    explicit AgentMissing(const std::string& node)
        : ClusterError("node lacks the transfer agent: " + node) {}
};
struct ArchiveNotFound : ClusterError {
    explicit ArchiveNotFound(const std::string& id)
        : ClusterError("no such checkpoint archive: " + id) {}
};

enum class TransferKind { RegistryJob, AgentRegistry, Direct };

std::string to_string(TransferKind k);

struct CheckpointArchive {
    std::string id;
    ConsumerState snapshot;        // immutable after creation
    std::string captured_hostname; // pod name at dump time
    std::uint64_t size_bytes = 27ULL * 1024 * 1024;
    SimTime created_at{};
    std::string source_node;
};

class CheckpointService {
  public:
    CheckpointService(Simulation& sim, Cluster& cluster, Broker& broker,
                      WorkloadRegistry& workloads)
        : sim_(sim), cluster_(cluster), broker_(broker),
          workloads_(workloads) {}

    // Pauses the pod's consumer now; the snapshot equals the state at the
    // pause instant. The consumer resumes and `done` fires once the dump
    // completes. Returns the archive id.
    std::string checkpoint_pod(const std::string& pod, Duration duration,
                               std::function<void(const std::string&)> done);

    // After the mode's latency the image is present in the target node's
    // store; `done` receives the image reference. AgentRegistry and
    // Direct require the agent on both source and target nodes.
    void transfer(const std::string& archive_id, TransferKind kind,
                  const std::string& target_node, Duration latency,
                  std::function<void(const std::string&)> done);

    // Local image construction on the archive's own node (no transfer).
    std::string install_local(const std::string& archive_id);

    // Creates the pod from the archive's image (pull-never) and a
    // consumer initialized from the snapshot, keyed by the resolved
    // hostname. The pod turns ready after spec.ready_delay.
    std::string restore_pod(const std::string& archive_id, const PodSpec& spec,
                            std::optional<OwnerRef> owner, ConsumerConfig cfg);

    // Consumer half of a restore, for pods the controller creates itself
    // (the Sequential recreate path).
    Consumer& create_restored_consumer(const std::string& archive_id,
                                       const std::string& pod_name,
                                       ConsumerConfig cfg);

    bool available(const std::string& id) const {
        return archives_.count(id) != 0;
    }
    const CheckpointArchive& archive(const std::string& id) const;
    std::size_t archive_count() const { return archives_.size(); }

    static std::string image_ref_for(const std::string& archive_id) {
        return "checkpoint-image:" + archive_id;
    }

    // The UTS snapshot would return the captured hostname; the consumer
    // must key its control queue off the actual pod name instead.
    static std::string resolve_hostname(const CheckpointArchive& archive,
                                        const std::string& actual_pod_name);

    // Applied to every consumer created by restore_pod.
    std::function<void(Consumer&)> on_consumer_created;

  private:
    Simulation& sim_;
    Cluster& cluster_;
    Broker& broker_;
    WorkloadRegistry& workloads_;
    std::map<std::string, CheckpointArchive> archives_;
    int counter_ = 0;
};

}  // namespace shadowsim
