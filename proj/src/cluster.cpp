#include "shadowsim/cluster.hpp"

#include <algorithm>

namespace shadowsim {

void Cluster::add_node(const std::string& id, bool has_agent) {
    nodes_.try_emplace(id, NodeRecord{id, {}, has_agent});
}

NodeRecord& Cluster::node(const std::string& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ClusterError("unknown node: " + id);
    return it->second;
}

const NodeRecord& Cluster::node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ClusterError("unknown node: " + id);
    return it->second;
}

std::vector<std::string> Cluster::node_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, n] : nodes_) ids.push_back(id);
    return ids;
}

void Cluster::define_service(const ServiceRecord& svc) {
    services_[svc.name] = svc;
}

bool Cluster::labels_match(const Labels& selector, const Labels& labels) const {
    if (selector.empty()) return false;  // an empty selector matches nothing
    for (const auto& [k, v] : selector) {
        auto it = labels.find(k);
        if (it == labels.end() || it->second != v) return false;
    }
    return true;
}

std::set<std::string> Cluster::service_endpoints(const std::string& svc) const {
    auto it = services_.find(svc);
    if (it == services_.end()) throw ClusterError("unknown service: " + svc);
    std::set<std::string> eps;
    for (const auto& [name, p] : pods_) {
        if (p.live() && p.ready && labels_match(it->second.selector, p.labels))
            eps.insert(name);
    }
    return eps;
}

void Cluster::create_statefulset(StatefulSetRecord ss) {
    std::string name = ss.name;
    statefulsets_[name] = std::move(ss);
    reconcile_statefulset(statefulsets_[name]);
}

void Cluster::create_deployment(DeploymentRecord dep) {
    std::string name = dep.name;
    deployments_[name] = std::move(dep);
    reconcile_deployment(deployments_[name]);
}

StatefulSetRecord& Cluster::statefulset(const std::string& name) {
    auto it = statefulsets_.find(name);
    if (it == statefulsets_.end())
        throw ClusterError("unknown statefulset: " + name);
    return it->second;
}

DeploymentRecord& Cluster::deployment(const std::string& name) {
    auto it = deployments_.find(name);
    if (it == deployments_.end())
        throw ClusterError("unknown deployment: " + name);
    return it->second;
}

std::string Cluster::create_pod(const PodSpec& spec,
                                std::optional<OwnerRef> owner) {
    auto it = pods_.find(spec.name);
    if (it != pods_.end() && it->second.live())
        throw IdentityConflict(spec.name);
    if (spec.require_local_image &&
        node(spec.node).image_store.count(spec.image_ref) == 0)
        throw ImageNotPresent(spec.image_ref, spec.node);

    PodRecord rec;
    rec.name = spec.name;
    rec.labels = spec.labels;
    rec.node = spec.node;
    rec.owner = owner;
    rec.lifecycle = PodLifecycle::Pending;
    rec.ready = false;
    rec.image_ref = spec.image_ref;
    pods_[spec.name] = rec;
    emit(spec.name, PodEvent::Created);

    std::string name = spec.name;
    sim_.schedule_in(spec.ready_delay, [this, name] {
        auto p = pods_.find(name);
        if (p == pods_.end() || p->second.lifecycle != PodLifecycle::Pending)
            return;  // deleted before it came up
        p->second.lifecycle = PodLifecycle::Running;
        p->second.ready = true;
        emit(name, PodEvent::Ready);
    });
    return name;
}

void Cluster::delete_pod(const std::string& name,
                         std::optional<Duration> grace) {
    auto it = pods_.find(name);
    if (it == pods_.end() || !it->second.live()) throw PodNotFound(name);
    if (it->second.lifecycle == PodLifecycle::Terminating) return;
    it->second.lifecycle = PodLifecycle::Terminating;
    emit(name, PodEvent::Terminating);
    Duration g = grace.value_or(default_grace_);
    sim_.schedule_in(g, [this, name] { finish_termination(name); });
}

void Cluster::finish_termination(const std::string& name) {
    auto it = pods_.find(name);
    if (it == pods_.end() || it->second.lifecycle != PodLifecycle::Terminating)
        return;
    if (it->second.ready) {
        it->second.ready = false;
        emit(name, PodEvent::Unready);
    }
    it->second.lifecycle = PodLifecycle::Gone;
    emit(name, PodEvent::Gone);
    reconcile_controllers();
}

std::string Cluster::ordinal_name(const std::string& ss, int i) const {
    return ss + "-" + std::to_string(i);
}

void Cluster::scale_statefulset(const std::string& name, int replicas,
                                std::optional<Duration> grace) {
    if (replicas < 0) throw ClusterError("negative replicas");
    auto& ss = statefulset(name);
    if (ss.replicas == replicas) {
        reconcile_statefulset(ss);  // idempotent
        return;
    }
    if (replicas < ss.replicas) {
        // Highest ordinal goes first.
        for (int i = ss.replicas - 1; i >= replicas; --i) {
            std::string pname = ordinal_name(name, i);
            auto it = pods_.find(pname);
            if (it != pods_.end() && it->second.live() &&
                it->second.lifecycle != PodLifecycle::Terminating &&
                it->second.owner &&
                it->second.owner->controller_name == name) {
                delete_pod(pname, grace);
            }
        }
    }
    ss.replicas = replicas;
    reconcile_statefulset(ss);
}

void Cluster::adopt_pod(const std::string& ss_name,
                        const std::string& pod_name) {
    auto& ss = statefulset(ss_name);
    auto it = pods_.find(pod_name);
    if (it == pods_.end() || !it->second.live()) throw PodNotFound(pod_name);
    PodRecord& p = it->second;
    if (p.owner) throw AdoptionRefused(pod_name + " already has an owner");
    bool ordinal_ok = false;
    for (int i = 0; i < ss.replicas; ++i) {
        if (pod_name == ordinal_name(ss_name, i)) ordinal_ok = true;
    }
    if (!ordinal_ok)
        throw AdoptionRefused(pod_name + " is not an expected ordinal of " +
                              ss_name);
    if (!labels_match(ss.selector, p.labels))
        throw AdoptionRefused(pod_name + " labels do not match selector");
    p.owner = OwnerRef{OwnerRef::Kind::StatefulSet, ss_name};
}

void Cluster::adopt_into_deployment(const std::string& dep_name,
                                    const std::string& pod_name) {
    auto& dep = deployment(dep_name);
    auto it = pods_.find(pod_name);
    if (it == pods_.end() || !it->second.live()) throw PodNotFound(pod_name);
    PodRecord& p = it->second;
    if (p.owner) throw AdoptionRefused(pod_name + " already has an owner");
    if (!labels_match(dep.selector, p.labels))
        throw AdoptionRefused(pod_name + " labels do not match selector");
    p.owner = OwnerRef{OwnerRef::Kind::Deployment, dep_name};
}

void Cluster::patch_deployment_affinity(const std::string& dep_name,
                                        const std::string& node) {
    deployment(dep_name).pod_template.node = node;
}

void Cluster::reconcile_statefulset(StatefulSetRecord& ss) {
    for (int i = 0; i < ss.replicas; ++i) {
        std::string pname = ordinal_name(ss.name, i);
        auto it = pods_.find(pname);
        if (it != pods_.end() && it->second.live()) {
            PodRecord& p = it->second;
            if (!p.owner && p.lifecycle != PodLifecycle::Terminating &&
                labels_match(ss.selector, p.labels)) {
                adopt_pod(ss.name, pname);
            }
            // A terminating holder defers creation until it is Gone.
            continue;
        }
        PodSpec spec;
        spec.name = pname;
        spec.labels = ss.pod_template.labels;
        spec.node = ss.pod_template.node.value_or(
            nodes_.empty() ? "" : nodes_.begin()->first);
        spec.image_ref = ss.pod_template.image_ref;
        spec.require_local_image = ss.pod_template.require_local_image;
        spec.ready_delay = ss.pod_template.startup_delay;
        create_pod(spec, OwnerRef{OwnerRef::Kind::StatefulSet, ss.name});
    }
}

void Cluster::reconcile_deployment(DeploymentRecord& dep) {
    int live = 0;
    std::vector<std::string> adoptable;
    for (auto& [name, p] : pods_) {
        if (!p.live() || p.lifecycle == PodLifecycle::Terminating) continue;
        if (!labels_match(dep.selector, p.labels)) continue;
        if (p.owner) {
            if (p.owner->kind == OwnerRef::Kind::Deployment &&
                p.owner->controller_name == dep.name)
                ++live;
        } else {
            adoptable.push_back(name);
        }
    }
    for (const auto& name : adoptable) {
        if (live >= dep.replicas) break;
        adopt_into_deployment(dep.name, name);
        ++live;
    }
    while (live < dep.replicas) {
        PodSpec spec;
        spec.name = dep.name + "-" + std::to_string(dep.name_counter++);
        spec.labels = dep.pod_template.labels;
        spec.node = dep.pod_template.node.value_or(
            nodes_.empty() ? "" : nodes_.begin()->first);
        spec.image_ref = dep.pod_template.image_ref;
        spec.require_local_image = dep.pod_template.require_local_image;
        spec.ready_delay = dep.pod_template.startup_delay;
        create_pod(spec, OwnerRef{OwnerRef::Kind::Deployment, dep.name});
        ++live;
    }
}

void Cluster::reconcile_controllers() {
    for (auto& [name, ss] : statefulsets_) reconcile_statefulset(ss);
    for (auto& [name, dep] : deployments_) reconcile_deployment(dep);
}

PodRecord& Cluster::pod(const std::string& name) {
    auto it = pods_.find(name);
    if (it == pods_.end()) throw PodNotFound(name);
    return it->second;
}

const PodRecord* Cluster::find_pod(const std::string& name) const {
    auto it = pods_.find(name);
    return it == pods_.end() ? nullptr : &it->second;
}

bool Cluster::pod_live(const std::string& name) const {
    const PodRecord* p = find_pod(name);
    return p && p->live();
}

std::vector<std::string> Cluster::live_pods() const {
    std::vector<std::string> out;
    for (const auto& [name, p] : pods_)
        if (p.live()) out.push_back(name);
    return out;
}

void Cluster::emit(const std::string& pod, PodEvent ev) {
    if (on_pod_event) on_pod_event(pod, ev);
}

}  // namespace shadowsim
