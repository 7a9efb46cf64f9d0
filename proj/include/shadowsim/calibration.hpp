#pragma once

// Timing calibration: per-configuration phase medians plus the global
// knobs. Values load from a `key = value` text file; anything not set
// keeps its default.

#include <map>
#include <string>

#include "shadowsim/reconciler.hpp"

namespace shadowsim {

enum class ConfigKind { SSSeq, SSShadow, SSSwap, DReg };

std::string config_name(ConfigKind k);
ConfigKind parse_config(const std::string& name);

struct ConfigTimings {
    double checkpoint_s = 0.34;
    double transfer_s = 5.35;
    double restore_s = 2.89;          // composite total for SS-Seq
    double replay_start_delay_s = 0.0;
};

struct Calibration {
    double mu = 84.0;
    double idle_poll_s = 0.010;
    double api_op_latency_s = 0.010;
    double broker_op_latency_s = 0.010;
    double source_drain_grace_s = 7.4;
    double swap_termination_grace_s = 3.5;
    double consumer_resume_delay_s = 1.0;
    double fence_drain_timeout_s = 120.0;
    double replay_cutoff_s = 120.0;
    double probe_interval_s = 0.010;
    double probe_gap_threshold_s = 3.0;
    double warmup_s = 5.0;
    double backoff_base_s = 0.25;
    double backoff_cap_s = 4.0;
    double jitter_fraction = 0.0;
    double direct_transfer_s = 1.0;   // no measured target
    double workload_startup_s = 0.5;
    std::map<ConfigKind, ConfigTimings> per_config = defaults_per_config();

    static std::map<ConfigKind, ConfigTimings> defaults_per_config();

    MigrationTimings timings_for(ConfigKind kind) const;
    TransferKind transfer_kind_for(ConfigKind kind) const;

    void set(const std::string& key, double value);
    static Calibration load_file(const std::string& path);
    std::string to_text() const;
};

}  // namespace shadowsim
