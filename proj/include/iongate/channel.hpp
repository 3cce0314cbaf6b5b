// channel.hpp — reduced spin channels of one gate run: the motional factor is
// traced out per spin dyad, for a fixed initial Fock state of the modes.
#pragma once

#include "iongate/propagate.hpp"

namespace iongate {

// E[a][b] = tr_M E(|a><b| (x) rho_M) on the addressed pair (d = 4).
struct SpinChannel {
    int d = 4;
    std::vector<Matrix> dyad_out;

    static SpinChannel zero(int d = 4);
    static SpinChannel identity_channel(int d = 4);
    Matrix& at(int a, int b) { return dyad_out[static_cast<size_t>(a * d + b)]; }
    const Matrix& at(int a, int b) const { return dyad_out[static_cast<size_t>(a * d + b)]; }

    SpinChannel& operator+=(const SpinChannel& other);
    SpinChannel& operator*=(double w);
};

// When every spin factor is sigma_y the channel is Schur multiplication by a 4x4
// scalar matrix tau in the product-y basis; tau_{ss'} = tr Phi_{ss'}[rho_M].
SpinChannel channel_from_tau(const Matrix& tau);

// Unitary run, block path (eps_omega = 0): four motional propagations.
Matrix unitary_tau(const HamiltonianTerms& ht, const std::vector<int>& fock_n,
                   const PropagationOptions& opts, double* leakage_out = nullptr);

// Unitary run on the full space (any shifts): d basis-vector propagations.
SpinChannel unitary_channel_full(const HamiltonianTerms& ht, const std::vector<int>& fock_n,
                                 const PropagationOptions& opts, double* leakage_out = nullptr);

// Lindblad run, block path (eps_omega = 0): ten independent block-pair evolutions.
Matrix lindblad_tau(const HamiltonianTerms& ht, const NoiseSpec& noise,
                    const std::vector<int>& fock_n, const PropagationOptions& opts,
                    double* leakage_out = nullptr);

// Lindblad run on the full space, dyad by dyad (small spaces only).
SpinChannel lindblad_channel_full(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                  const std::vector<int>& fock_n,
                                  const PropagationOptions& opts, double* leakage_out = nullptr);

struct ChannelDiagnostics {
    double leakage = 0.0;        // final top-two-level population, max over modes
    int cutoff_growths = 0;      // retries forced by the leakage check
    std::vector<int> cutoffs;    // final per-mode cutoffs
    bool used_block_path = false;
};

// Dispatch: picks the block path when available, retries with cutoffs * 1.5 when the
// leakage check trips. The space is built from the per-mode policy cutoff(n_init).
SpinChannel per_fock_channel(const DriveProgram& program, const RealMatrix& pair_eta,
                             HamiltonianLevel level, const ErrorShift& shifts,
                             const NoiseSpec& noise, const std::vector<int>& fock_n,
                             double coupling, int cutoff_margin,
                             const PropagationOptions& opts, ChannelDiagnostics* diag = nullptr);

// Final-state top-two-level population of a set of motional/full vectors.
double leakage_of(const FockSpace& space, const std::vector<Vector>& states, bool motional_only);

} // namespace iongate
