// runner.hpp — sweep execution over a worker pool with deterministic merge,
// plus the CSV / JSON-lines / plotdata emitters.
#pragma once

#include "iongate/config.hpp"
#include "iongate/metrics.hpp"

#include <iosfwd>
#include <map>
#include <optional>

namespace iongate {

struct GateReport {
    double fidelity = 0.0;
    double infidelity = 1.0;
    Matrix chi = Matrix::Zero(4, 4); // dissipative process perturbation (Eq.-22 basis)
    bool has_chi = false;
    std::map<std::vector<int>, double> per_fock;
    double leakage = 0.0;
    double amp_peak = 0.0;
    int cutoff_max = 0;
    bool block_path = false;
    std::vector<std::string> warnings;
};

// One gate run at fixed parameters (no sweep): the workhorse behind run_experiment.
GateReport evaluate_gate(const ExperimentConfig& cfg, GateVariant variant,
                         std::pair<int, int> pair);

struct ResultRecord {
    long point = 0;
    std::vector<double> axis_values;
    std::string variant;
    std::string pair_id;
    double fidelity = 0.0;
    double infidelity = 1.0;
    std::optional<double> infid_ratio;
    double leakage = 0.0;
    double amp_peak = 0.0;
    int cutoff_max = 0;
    std::string status = "ok";
    double wall_ms = 0.0; // JSON-lines only; excluded from CSV for byte determinism
};

struct RunOutput {
    std::vector<std::string> axis_names;
    std::vector<ResultRecord> records;
    int exit_code = 0; // 0 ok, 3 when any point failed
};

// Cartesian sweep, (point x variant x pair) jobs over `workers` threads
// (0 = IONGATE_WORKERS env or hardware concurrency). Output order is
// deterministic and independent of the worker count.
RunOutput run_experiment(const ExperimentConfig& cfg, int workers = 0);

void emit_csv(std::ostream& os, const RunOutput& out);
void emit_jsonl(std::ostream& os, const RunOutput& out);
void emit_plotdata(std::ostream& os, const RunOutput& out);

// Writes the formats requested by the config; returns 0 or exit code 4 on
// unwritable paths.
int write_outputs(const ExperimentConfig& cfg, const RunOutput& out);

// Re-parse records from a JSON-lines file (the emit subcommand's input).
RunOutput read_jsonl(const std::string& path);

// 12-significant-digit float formatting shared by all emitters.
std::string format_g12(double v);

} // namespace iongate
