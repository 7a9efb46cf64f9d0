#pragma once

// Miniature cluster model: nodes with local image stores, pods with
// owner references and lifecycle, StatefulSet/Deployment controller
// semantics, and label-selector services. The identity constraint (no
// two live pods share a name) is enforced at creation and auditable at
// every event.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowsim/sim.hpp"

namespace shadowsim {

struct ClusterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IdentityConflict : ClusterError {
    explicit IdentityConflict(const std::string& name)
        : ClusterError("pod name already held by a live pod: " + name) {}
};
struct PodNotFound : ClusterError {
    explicit PodNotFound(const std::string& name)
        : ClusterError("no live pod named " + name) {}
};
struct AdoptionRefused : ClusterError {
    explicit AdoptionRefused(const std::string& why)
        : ClusterError("adoption refused: " + why) {}
};
struct ImageNotPresent : ClusterError {
    explicit ImageNotPresent(const std::string& ref, const std::string& node)
        : ClusterError("image " + ref + " not present on node " + node) {}
};

using Labels = std::map<std::string, std::string>;

struct OwnerRef {
    enum class Kind { StatefulSet, Deployment };
    Kind kind;
    std::string controller_name;

    bool operator==(const OwnerRef&) const = default;
};

enum class PodLifecycle { Pending, Running, Terminating, Gone };

struct PodRecord {
    std::string name;
    Labels labels;
    std::string node;
    std::optional<OwnerRef> owner;
    PodLifecycle lifecycle = PodLifecycle::Pending;
    bool ready = false;
    std::string image_ref;
    std::optional<std::string> app_handle;  // consumer instance id

    bool live() const { return lifecycle != PodLifecycle::Gone; }
};

struct PodSpec {
    std::string name;
    Labels labels;
    std::string node;
    std::string image_ref;
    bool require_local_image = false;  // imagePullPolicy: Never
    Duration ready_delay{};            // restore/startup delay
};

struct PodTemplate {
    Labels labels;
    std::string image_ref;
    std::optional<std::string> node;  // node constraint / affinity
    bool require_local_image = false;
    Duration startup_delay{};
};

struct StatefulSetRecord {
    std::string name;
    int replicas = 0;
    PodTemplate pod_template;
    Labels selector;
};

struct DeploymentRecord {
    std::string name;
    int replicas = 0;
    PodTemplate pod_template;
    Labels selector;
    int name_counter = 0;
};

struct ServiceRecord {
    std::string name;
    Labels selector;
};

struct NodeRecord {
    std::string id;
    std::set<std::string> image_store;
    bool has_agent = false;
};

enum class PodEvent { Created, Ready, Terminating, Unready, Gone };

class Cluster {
  public:
    explicit Cluster(Simulation& sim, Duration default_grace)
        : sim_(sim), default_grace_(default_grace) {}

    void add_node(const std::string& id, bool has_agent);
    NodeRecord& node(const std::string& id);
    const NodeRecord& node(const std::string& id) const;
    bool has_node(const std::string& id) const { return nodes_.count(id); }
    std::vector<std::string> node_ids() const;

    void define_service(const ServiceRecord& svc);
    // Ready pods whose labels match the selector; recomputed on every pod
    // state change and exposed here as a pure query.
    std::set<std::string> service_endpoints(const std::string& svc) const;
    const std::map<std::string, ServiceRecord>& services() const {
        return services_;
    }

    void create_statefulset(StatefulSetRecord ss);
    void create_deployment(DeploymentRecord dep);
    StatefulSetRecord& statefulset(const std::string& name);
    DeploymentRecord& deployment(const std::string& name);
    bool has_statefulset(const std::string& name) const {
        return statefulsets_.count(name) != 0;
    }
    bool has_deployment(const std::string& name) const {
        return deployments_.count(name) != 0;
    }

    // Creates a pod; Pending now, Running+ready after spec.ready_delay.
    // Throws IdentityConflict if the name is held by a live pod and
    // ImageNotPresent when a pull-never image is missing on the node.
    std::string create_pod(const PodSpec& spec,
                           std::optional<OwnerRef> owner);

    // Terminating now; the pod stays ready for `grace`, then goes unready
    // and Gone. Owning controllers react once it is Gone.
    void delete_pod(const std::string& name,
                    std::optional<Duration> grace = std::nullopt);

    // Scale-down removes highest-ordinal pods first; scale-up adopts a
    // matching unowned pod when one exists, otherwise creates, deferring
    // while the name is held by a terminating pod.
    void scale_statefulset(const std::string& name, int replicas,
                           std::optional<Duration> grace = std::nullopt);

    void adopt_pod(const std::string& ss_name, const std::string& pod_name);
    void adopt_into_deployment(const std::string& dep_name,
                               const std::string& pod_name);

    void patch_deployment_affinity(const std::string& dep_name,
                                   const std::string& node);

    PodRecord& pod(const std::string& name);
    const PodRecord* find_pod(const std::string& name) const;
    bool pod_live(const std::string& name) const;
    const std::map<std::string, PodRecord>& pods() const { return pods_; }
    std::vector<std::string> live_pods() const;

    // Pod state changes funnel through here (consumer detach, reconciler
    // watches, audit hooks).
    std::function<void(const std::string& pod, PodEvent)> on_pod_event;

    // Test hook: inserts a live pod bypassing the identity guard so the
    // auditor's detection of conflicts can be exercised.
    void unsafe_insert_pod(const PodRecord& rec) { pods_[rec.name] = rec; }

  private:
    void emit(const std::string& pod, PodEvent ev);
    void finish_termination(const std::string& name);
    void reconcile_statefulset(StatefulSetRecord& ss);
    void reconcile_deployment(DeploymentRecord& dep);
    void reconcile_controllers();
    bool labels_match(const Labels& selector, const Labels& labels) const;
    std::string ordinal_name(const std::string& ss, int i) const;

    Simulation& sim_;
    Duration default_grace_;
    std::map<std::string, NodeRecord> nodes_;
    std::map<std::string, PodRecord> pods_;
    std::map<std::string, StatefulSetRecord> statefulsets_;
    std::map<std::string, DeploymentRecord> deployments_;
    std::map<std::string, ServiceRecord> services_;
};

}  // namespace shadowsim
