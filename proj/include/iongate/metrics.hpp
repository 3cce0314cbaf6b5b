// metrics.hpp — gate fidelity, thermal averaging, process-matrix extraction,
// heating cost functionals and the constrained amplitude minimizer.
#pragma once

#include "iongate/channel.hpp"
#include "iongate/drive.hpp"
#include "iongate/propagate.hpp"

#include <map>

namespace iongate {

// --- fidelity -------------------------------------------------------------------

struct FidelityResult {
    double fidelity = 0.0;
    double imag_residue = 0.0; // magnitude of the discarded imaginary part
};

// F = (1/d^2) sum_{a,b} <a| U^dag tr_M(E(|a><b| x rho_M)) U |b>, real part.
FidelityResult gate_fidelity_full(const SpinChannel& channel, const Matrix& target);
double gate_fidelity(const SpinChannel& channel, const Matrix& target);

// Weighted per-Fock average sum_n P(n) F(n), renormalized over the captured mass.
// Throws needs_more_states when the table's support holds less than min_mass.
double thermal_fidelity(const std::map<std::vector<int>, double>& per_fock,
                        const std::function<double(const std::vector<int>&)>& weight,
                        double min_mass = 1.0 - 1e-6);

// --- process matrix ---------------------------------------------------------------

struct ProcessMatrix {
    Matrix chi;            // 4x4 Hermitian, basis {1, sy_1, sy_2, sy_1 sy_2}
    double residual = 0.0; // least-squares residual of the overdetermined system
    bool consistent = true;
};

// Solve Delta rho_S = sum_{mn} chi_mn A_m rho_S A_n^dag over the dyad inputs.
ProcessMatrix process_matrix(const DyadMap& delta_map, double warn_residual = 1e-8);

// --- heating cost functionals ------------------------------------------------------

// Max magnitudes of the nine first-order cost integrals at t = T, plus C = max(c6, c8).
struct CostVector {
    std::array<double, 9> c{}; // c[0] = c1, ...
    double c_max = 0.0;        // max(c6, c8)
    bool closed_form = false;  // quadrature-only when a zero-frequency tone is present
};

// alpha_j(t) = int_0^t F_{1,1}^{(j)}; costs evaluated with pointwise products under the
// outer integral. Closed-form tone algebra is cross-checked against quadrature to
// `agree_tol` (precision_error on mismatch); zero-frequency tones force quadrature.
CostVector heating_costs(const std::array<std::vector<Tone>, 2>& f11_tones, double gate_time,
                         double agree_tol = 1e-10);

// --- minimizer ----------------------------------------------------------------------

struct MinimizeResult {
    std::vector<double> amplitudes; // real amplitudes per family frequency
    double achieved_c = 0.0;
    double fourier_residual = 0.0;
    double phase = 0.0; // first-order entangling phase of the returned tones
};

// Fixed frequency family {a_m}, free real amplitudes; constraints: Fourier residual 0
// and first-order entangling phase (pair sy-sy coefficient) = phi_pair. Deterministic
// multi-start local descent (8 fixed seeds). Throws infeasible_target when the family
// admits no nonzero constrained solution.
MinimizeResult minimize_heating_cost(const std::vector<double>& frequencies, double gate_time,
                                     double phi_pair);

// First-order entangling phase functional Im int_0^T F conj(alpha) dt of one tone list.
double entangling_phase(const std::vector<Tone>& tones, double gate_time);

} // namespace iongate
