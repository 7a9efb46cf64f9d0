#pragma once

// Experiment runner: builds a self-contained simulated cluster per run,
// drives one migration to a terminal phase plus residue drain, audits it,
// and aggregates the 4x7x10 evaluation matrix.

#include <optional>
#include <string>
#include <vector>

#include "shadowsim/calibration.hpp"
#include "shadowsim/probe.hpp"
#include "shadowsim/replay_oracle.hpp"

namespace shadowsim {

struct ExperimentConfig {
    ConfigKind config = ConfigKind::SSShadow;
    int rate = 10;  // messages/second
    std::uint64_t seed = 1;
    Calibration calibration;
    QueueNames queues;
    // Test hooks.
    FaultPlan fault_plan;
    bool audit_enabled = true;
};

struct TerminalState {
    std::string survivor_pod;
    std::string owner_kind;  // StatefulSet | Deployment | none
    std::string node;
    int live_pods = 0;
};

struct RunReport {
    std::string config;
    int rate = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure_reason;
    std::string strategy;
    std::string transfer_mode;

    std::vector<std::pair<std::string, double>> phase_timings_s;  // in order
    double total_s = 0.0;
    DowntimeReport downtime;
    LossAudit loss;
    TerminalState terminal;
    std::vector<Violation> violations;

    // Replay telemetry for the oracle cross-check.
    double replay_bind_s = 0.0;
    double replay_started_s = 0.0;
    std::optional<double> replay_first_consume_s;
    std::optional<double> replay_drained_s;
    std::uint64_t replay_backlog_at_consume = 0;
    bool cutoff_fired = false;
    double effective_cutoff_s = 0.0;
    double fence_window_s = 0.0;
    int fence_buffered = 0;

    double phase_s(const std::string& name) const;
    std::string to_json_string() const;  // deterministic bytes
    std::string csv_row() const;
    static std::string csv_header();
};

RunReport run_single(const ExperimentConfig& cfg);

struct MatrixSpec {
    std::vector<ConfigKind> configs = {ConfigKind::SSSeq, ConfigKind::SSShadow,
                                       ConfigKind::SSSwap, ConfigKind::DReg};
    std::vector<int> rates = {10, 20, 40, 60, 80, 100, 120};
    int repetitions = 10;
    std::uint64_t base_seed = 42;
    Calibration calibration;
    int parallel = 1;
};

std::vector<RunReport> run_matrix(const MatrixSpec& spec);

struct CellSummary {
    std::string config;
    int rate = 0;
    int runs = 0;
    int failed = 0;
    double median_total_s = 0.0, q1_total_s = 0.0, q3_total_s = 0.0;
    double median_downtime_s = 0.0;
    std::vector<std::pair<std::string, double>> median_phases_s;
    std::uint64_t missing_total = 0;
    std::uint64_t duplicates_total = 0;
};

std::vector<CellSummary> summarize(const std::vector<RunReport>& reports);
const CellSummary* find_cell(const std::vector<CellSummary>& cells,
                             ConfigKind config, int rate);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

// Matrix-derived acceptance checks (zero loss, downtime, restore
// reduction, total-time targets, cutoff regime, oracle agreement,
// identity, swap end-state). Fault-injection and determinism checks run
// extra targeted simulations and are exposed separately.
std::vector<CriterionResult> compare_to_paper(
    const std::vector<RunReport>& reports,
    const std::vector<CellSummary>& cells, const Calibration& cal);

CriterionResult check_fault_injection(const Calibration& cal,
                                      std::uint64_t seed);
CriterionResult check_determinism(const Calibration& cal, std::uint64_t seed);

struct OracleRow {
    std::string config;
    int rate = 0;
    double t_accum_s = 0.0;
    double backlog = 0.0;
    double predicted_s = 0.0;
    double simulated_s = 0.0;
    double error_s = 0.0;
};
std::vector<OracleRow> oracle_rows(const std::vector<RunReport>& reports,
                                   const Calibration& cal);

std::string reports_to_json(const std::vector<RunReport>& reports);
std::vector<RunReport> reports_from_json_file(const std::string& path);
std::string reports_to_csv(const std::vector<RunReport>& reports);

std::string summary_table(const std::vector<CellSummary>& cells);
std::string phase_breakdown_table(const std::vector<CellSummary>& cells,
                                  int rate);

}  // namespace shadowsim
