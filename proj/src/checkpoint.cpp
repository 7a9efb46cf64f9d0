#include "shadowsim/checkpoint.hpp"

namespace shadowsim {

std::string to_string(TransferKind k) {
    switch (k) {
        case TransferKind::RegistryJob: return "Registry";
        case TransferKind::AgentRegistry: return "AgentRegistry";
        case TransferKind::Direct: return "Direct";
    }
    return "?";
}

std::string CheckpointService::checkpoint_pod(
    const std::string& pod, Duration duration,
    std::function<void(const std::string&)> done) {
    const PodRecord* p = cluster_.find_pod(pod);
    Consumer* consumer = workloads_.find(pod);
    if (!p || p->lifecycle != PodLifecycle::Running || !consumer)
        throw PodNotRunning(pod);

    consumer->pause();
    CheckpointArchive arch;
    arch.id = "ckpt-" + std::to_string(++counter_);
    arch.snapshot = consumer->state();
    arch.captured_hostname = pod;
    arch.created_at = sim_.now();
    arch.source_node = p->node;
    std::string id = arch.id;

    sim_.schedule_in(duration, [this, id, pod, arch = std::move(arch),
                                done = std::move(done)]() mutable {
        archives_.emplace(id, std::move(arch));
        if (Consumer* c = workloads_.find(pod)) c->resume();
        if (done) done(id);
    });
    return id;
}

const CheckpointArchive& CheckpointService::archive(
    const std::string& id) const {
    auto it = archives_.find(id);
    if (it == archives_.end()) throw ArchiveNotFound(id);
    return it->second;
}

void CheckpointService::transfer(const std::string& archive_id,
                                 TransferKind kind,
                                 const std::string& target_node,
                                 Duration latency,
                                 std::function<void(const std::string&)> done) {
    const CheckpointArchive& arch = archive(archive_id);
    if (kind == TransferKind::AgentRegistry || kind == TransferKind::Direct) {
        if (!cluster_.node(arch.source_node).has_agent)
            throw AgentMissing(arch.source_node);
        if (!cluster_.node(target_node).has_agent)
            throw AgentMissing(target_node);
    }
    std::string ref = image_ref_for(archive_id);
    sim_.schedule_in(latency, [this, ref, target_node, done = std::move(done)] {
        cluster_.node(target_node).image_store.insert(ref);
        if (done) done(ref);
    });
}

std::string CheckpointService::install_local(const std::string& archive_id) {
    const CheckpointArchive& arch = archive(archive_id);
    std::string ref = image_ref_for(archive_id);
    cluster_.node(arch.source_node).image_store.insert(ref);
    return ref;
}

std::string CheckpointService::resolve_hostname(
    const CheckpointArchive&, const std::string& actual_pod_name) {
    return actual_pod_name;
}

Consumer& CheckpointService::create_restored_consumer(
    const std::string& archive_id, const std::string& pod_name,
    ConsumerConfig cfg) {
    const CheckpointArchive& arch = archive(archive_id);
    std::string consumer_id = resolve_hostname(arch, pod_name);
    Consumer& c = workloads_.create(sim_, broker_, consumer_id, cfg);
    c.load_state(arch.snapshot);
    if (on_consumer_created) on_consumer_created(c);
    return c;
}

std::string CheckpointService::restore_pod(const std::string& archive_id,
                                           const PodSpec& spec,
                                           std::optional<OwnerRef> owner,
                                           ConsumerConfig cfg) {
    PodSpec s = spec;
    s.image_ref = image_ref_for(archive_id);
    s.require_local_image = true;
    cluster_.create_pod(s, owner);
    create_restored_consumer(archive_id, s.name, cfg);
    return s.name;
}

}  // namespace shadowsim
