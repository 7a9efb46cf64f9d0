#include "shadowsim/calibration.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shadowsim {

std::string config_name(ConfigKind k) {
    switch (k) {
        case ConfigKind::SSSeq: return "ss-seq";
        case ConfigKind::SSShadow: return "ss-shadow";
        case ConfigKind::SSSwap: return "ss-swap";
        case ConfigKind::DReg: return "d-reg";
    }
    return "?";
}

ConfigKind parse_config(const std::string& name) {
    if (name == "ss-seq") return ConfigKind::SSSeq;
    if (name == "ss-shadow") return ConfigKind::SSShadow;
    if (name == "ss-swap") return ConfigKind::SSSwap;
    if (name == "d-reg") return ConfigKind::DReg;
    throw std::invalid_argument("unknown configuration: " + name +
                                " (expected ss-seq|ss-shadow|ss-swap|d-reg)");
}

std::map<ConfigKind, ConfigTimings> Calibration::defaults_per_config() {
    return {
        {ConfigKind::SSSeq, ConfigTimings{0.34, 5.35, 38.41, 0.0}},
        {ConfigKind::SSShadow, ConfigTimings{0.34, 5.64, 2.89, 0.0}},
        {ConfigKind::SSSwap, ConfigTimings{0.39, 0.19, 3.02, 0.0}},
        {ConfigKind::DReg, ConfigTimings{0.33, 5.38, 2.50, 0.0}},
    };
}

TransferKind Calibration::transfer_kind_for(ConfigKind kind) const {
    return kind == ConfigKind::SSSwap ? TransferKind::AgentRegistry
                                      : TransferKind::RegistryJob;
}

MigrationTimings Calibration::timings_for(ConfigKind kind) const {
    const ConfigTimings& ct = per_config.at(kind);
    auto model = [this](double median) {
        return jitter_fraction > 0.0
                   ? DurationModel::jittered(median, jitter_fraction)
                   : DurationModel::constant(median);
    };
    MigrationTimings t;
    t.checkpoint_model = model(ct.checkpoint_s);
    t.transfer_model = model(ct.transfer_s);
    if (kind == ConfigKind::SSSeq) {
        t.sequential_restore_total_s = ct.restore_s;
        t.restore_model = model(2.89);  // unused on the Sequential path
    } else {
        t.restore_model = model(ct.restore_s);
    }
    t.source_drain_grace = seconds(source_drain_grace_s);
    t.swap_termination_grace = seconds(swap_termination_grace_s);
    t.consumer_resume_delay = seconds(consumer_resume_delay_s);
    t.replay_start_extra = seconds(ct.replay_start_delay_s);
    t.api_op_latency = seconds(api_op_latency_s);
    t.broker_op_latency = seconds(broker_op_latency_s);
    t.backoff_base = seconds(backoff_base_s);
    t.backoff_cap = seconds(backoff_cap_s);
    t.fence_drain_timeout = seconds(fence_drain_timeout_s);
    t.consumer_cfg.mu_per_s = static_cast<int>(mu);
    t.consumer_cfg.idle_poll = seconds(idle_poll_s);
    return t;
}

void Calibration::set(const std::string& key, double value) {
    auto per_config_key = [&](const std::string& key_) -> bool {
        auto dot = key_.find('.');
        if (dot == std::string::npos) return false;
        ConfigKind kind = parse_config(key_.substr(0, dot));
        std::string field = key_.substr(dot + 1);
        ConfigTimings& ct = per_config.at(kind);
        if (field == "checkpoint_s") ct.checkpoint_s = value;
        else if (field == "transfer_s") ct.transfer_s = value;
        else if (field == "restore_s") ct.restore_s = value;
        else if (field == "replay_start_delay_s") ct.replay_start_delay_s = value;
        else throw std::invalid_argument("unknown calibration field: " + key_);
        return true;
    };
    if (key == "mu") mu = value;
    else if (key == "idle_poll_s") idle_poll_s = value;
    else if (key == "api_op_latency_s") api_op_latency_s = value;
    else if (key == "broker_op_latency_s") broker_op_latency_s = value;
    else if (key == "source_drain_grace_s") source_drain_grace_s = value;
    else if (key == "swap_termination_grace_s") swap_termination_grace_s = value;
    else if (key == "consumer_resume_delay_s") consumer_resume_delay_s = value;
    else if (key == "fence_drain_timeout_s") fence_drain_timeout_s = value;
    else if (key == "replay_cutoff_s") replay_cutoff_s = value;
    else if (key == "probe_interval_s") probe_interval_s = value;
    else if (key == "probe_gap_threshold_s") probe_gap_threshold_s = value;
    else if (key == "warmup_s") warmup_s = value;
    else if (key == "backoff_base_s") backoff_base_s = value;
    else if (key == "backoff_cap_s") backoff_cap_s = value;
    else if (key == "jitter_fraction") jitter_fraction = value;
    else if (key == "direct_transfer_s") direct_transfer_s = value;
    else if (key == "workload_startup_s") workload_startup_s = value;
    else if (!per_config_key(key))
        throw std::invalid_argument("unknown calibration key: " + key);
}

Calibration Calibration::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calibration file: " + path);
    Calibration cal;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key, eq;
        double value;
        if (!(ls >> key)) continue;  // blank
        if (!(ls >> eq) || eq != "=" || !(ls >> value))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected `key = value`");
        cal.set(key, value);
    }
    return cal;
}

std::string Calibration::to_text() const {
    std::ostringstream out;
    out << "# shadowsim calibration (seconds unless noted)\n";
    out << "mu = " << mu << "\n";
    out << "replay_cutoff_s = " << replay_cutoff_s << "\n";
    out << "source_drain_grace_s = " << source_drain_grace_s << "\n";
    out << "swap_termination_grace_s = " << swap_termination_grace_s << "\n";
    out << "consumer_resume_delay_s = " << consumer_resume_delay_s << "\n";
    out << "fence_drain_timeout_s = " << fence_drain_timeout_s << "\n";
    out << "idle_poll_s = " << idle_poll_s << "\n";
    out << "api_op_latency_s = " << api_op_latency_s << "\n";
    out << "broker_op_latency_s = " << broker_op_latency_s << "\n";
    out << "backoff_base_s = " << backoff_base_s << "\n";
    out << "backoff_cap_s = " << backoff_cap_s << "\n";
    out << "probe_interval_s = " << probe_interval_s << "\n";
    out << "probe_gap_threshold_s = " << probe_gap_threshold_s << "\n";
    out << "warmup_s = " << warmup_s << "\n";
    out << "jitter_fraction = " << jitter_fraction << "\n";
    out << "direct_transfer_s = " << direct_transfer_s << "\n";
    out << "workload_startup_s = " << workload_startup_s << "\n";
    for (const auto& [kind, ct] : per_config) {
        const std::string n = config_name(kind);
        out << n << ".checkpoint_s = " << ct.checkpoint_s << "\n";
        out << n << ".transfer_s = " << ct.transfer_s << "\n";
        out << n << ".restore_s = " << ct.restore_s << "\n";
        out << n << ".replay_start_delay_s = " << ct.replay_start_delay_s
            << "\n";
    }
    return out.str();
}

}  // namespace shadowsim
