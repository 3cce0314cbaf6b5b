// propagate.hpp — unitary and Lindblad propagation of the driven pair, the
// rotated-frame perturbative dissipation channel, and the reference unitary.
#pragma once

#include "iongate/hamiltonian.hpp"

#include <array>
#include <functional>

namespace iongate {

enum class Integrator { ExponentialMidpoint, CommutatorFree4 };

struct PropagationOptions {
    int steps = 2000;
    Integrator integrator = Integrator::CommutatorFree4;
    bool leakage_check = true;
    double leakage_tol = 1e-8;
    int leakage_interval = 64; // steps between top-level population samples
};

// --- full-space unitary ---------------------------------------------------------

// Time-ordered product of exponential steps applied to the identity; midpoint rule is
// order 2, the commutator-free scheme order 4. Deterministic for fixed options.
Matrix propagate_unitary(const HamiltonianTerms& ht, const PropagationOptions& opts);

// Propagate a batch of full-space state vectors in place (same stepping).
void propagate_states(const HamiltonianTerms& ht, const PropagationOptions& opts,
                      std::vector<Vector>& states);

// --- spin-y block fast path ------------------------------------------------------

// Valid when eps_omega = 0: every spin factor is sigma_y, so the joint propagator is
// block diagonal in the product sigma_y eigenbasis. `signs` selects the block.
void propagate_block_states(const HamiltonianTerms& ht, const std::array<double, 2>& signs,
                            const PropagationOptions& opts, std::vector<Vector>& states);

Matrix propagate_block_unitary(const HamiltonianTerms& ht, const std::array<double, 2>& signs,
                               const PropagationOptions& opts);

// Eigenvectors of sigma_y (paper convention) for +1/-1; pair basis is their product.
Vector sigma_y_eigvec(double sign);
// 4x4 transform V whose columns are |s1 s2> y-product states ordered (++, +-, -+, --).
Matrix pair_y_basis();
inline std::array<double, 2> pair_signs(int block) {
    return {block < 2 ? 1.0 : -1.0, (block % 2) == 0 ? 1.0 : -1.0};
}

// --- Lindblad --------------------------------------------------------------------

// RK4 on d rho/dt = -i[H, rho] + sum_l L^l(rho) with jump operators a_l (gamma_-),
// a_l^dag (gamma_+), a_l^dag a_l (gamma_n). Trace and Hermiticity preserved to 1e-8.
Matrix propagate_lindblad(const HamiltonianTerms& ht, const NoiseSpec& noise,
                          const Matrix& rho0, const PropagationOptions& opts);

// Motional-only block pair (s, s'): d R/dt = -i(H_s R - R H_s') + dissipators.
Matrix propagate_lindblad_block(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                const std::array<double, 2>& signs_left,
                                const std::array<double, 2>& signs_right, const Matrix& r0,
                                const PropagationOptions& opts);

// --- perturbative dissipation ----------------------------------------------------

// First-order rotated-frame dissipation, Delta rho_S = tr_M int_0^T Ltilde(t)[rho_S x rho_M] dt
// evaluated per spin dyad. Requires eps_omega = 0 (spin-y block structure).
// Returned as the 4x4 array of spin-space operators indexed by dyad |a><b|.
struct DyadMap {
    int d = 4;
    std::vector<Matrix> out; // d*d entries, index a*d + b

    Matrix& operator()(int a, int b) { return out[static_cast<size_t>(a * d + b)]; }
    const Matrix& operator()(int a, int b) const { return out[static_cast<size_t>(a * d + b)]; }
};

DyadMap perturbative_dissipation_map(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                     const std::vector<int>& rho_m_fock,
                                     const PropagationOptions& opts);

// Single-input form for a given spin state.
Matrix perturbative_dissipation(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                const Matrix& rho_s, const std::vector<int>& rho_m_fock,
                                const PropagationOptions& opts);

// --- reference gate --------------------------------------------------------------

// exp(i phi sum_{j != k} sy_j sy_k) on the spin register (ordered pairs); with
// pair_only the sum runs over the one addressed pair (both orders).
Matrix ms_reference_unitary(double phi, int n_ions, bool all_pairs = false);

// y-basis index of a computational state (helper for channel assembly).
long fock_index(const FockSpace& space, long spin, const std::vector<int>& n);

} // namespace iongate
