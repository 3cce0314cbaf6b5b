// config.hpp — declarative experiment description: versioned JSON schema,
// strict validation, sweep axes, and drive-program round-tripping.
#pragma once

#include "iongate/drive.hpp"
#include "iongate/hamiltonian.hpp"
#include "iongate/propagate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iongate {

struct SweepAxis {
    std::string field;
    std::vector<double> values;
};

struct ExperimentConfig {
    int schema_version = 1;
    std::string description;

    // system
    int n_ions = 2;
    double coupling = 0.05;
    std::optional<RealMatrix> explicit_eta;
    std::optional<RealVector> explicit_ratios;

    // gate
    std::vector<GateVariant> variants{GateVariant::Robust};
    double phi_t = kPi / 8;
    double delta = 0.02;
    int central_mode = 0; // 0-based
    std::pair<int, int> pair{0, 1};
    bool all_pairs = false;
    std::optional<double> amplitude_cap;
    std::optional<DriveProgram> custom_program;

    // noise (uniform unless per-mode lists given)
    double gamma = 0.0;
    std::optional<std::vector<double>> gamma_minus, gamma_plus, gamma_dephase;

    // errors
    double eps_omega = 0.0;
    std::vector<double> eps_nu_list; // empty = zero; single entry = uniform
    double eps_nu_uniform = 0.0;

    // initial state
    bool thermal = false;
    std::vector<int> fock_n;      // per mode (empty = ground)
    int fock_uniform = 0;         // used when fock_n empty and fock given as scalar
    bool fock_is_uniform = true;
    double thermal_nbar = 0.0;
    double thermal_support_tail = 1e-6;
    int thermal_grid_points = 0; // 0 = automatic

    // sweep
    std::vector<SweepAxis> axes;

    // numerics
    int steps = 1500;
    Integrator integrator = Integrator::CommutatorFree4;
    int cutoff_margin = 15;
    HamiltonianLevel level = HamiltonianLevel::ExactSeries;
    bool perturbative_dissipation = false;
    double leakage_tol = 1e-8;

    // output
    std::string out_directory = ".";
    std::string out_basename = "results";
    std::vector<std::string> formats{"csv"};

    // --- helpers ---
    SystemSpec make_system() const;
    NoiseSpec make_noise(int n_modes) const;
    ErrorShift make_shifts(int n_modes) const;
    std::vector<int> initial_fock(int n_modes) const;
    PropagationOptions propagation() const;

    // mutate one sweepable field; throws std::invalid_argument for unknown fields
    void apply_axis(const std::string& field, double value);
};

// Parse and validate; throws config_error with a field path on any violation.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& what, std::string path_)
        : std::runtime_error(what), path(std::move(path_)) {}
    std::string path;
};

ExperimentConfig load_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// Names accepted by sweep axes.
const std::vector<std::string>& sweepable_fields();

// Drive program round-trip (External Interfaces of the drive module).
std::string program_to_json(const DriveProgram& program);
DriveProgram program_from_json(const std::string& json_text);

// Human-readable derived-quantities report for `validate`.
std::string derived_report(const ExperimentConfig& cfg);

} // namespace iongate
