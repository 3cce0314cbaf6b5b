// fockspace.hpp — truncated multi-mode bosonic space joined with the qubit register:
// normal-mode geometry, sideband displacement-series operators, embedding, thermal weights.
#pragma once

#include "iongate/types.hpp"

#include <optional>

namespace iongate {

// ---------------------------------- geometry ---------------------------------

struct NormalModes {
    RealVector ratios;  // kappa_l, ascending, kappa_1 = 1 for the COM mode
    RealMatrix coeffs;  // chi_{jl}, columns orthonormal, first nonzero entry per column > 0
};

// Axial modes of an equal-mass linear chain. Equilibrium positions from damped Newton
// on the dimensionless Coulomb potential; mode vectors from the Hessian eigensolve.
NormalModes normal_modes(int n_ions);

// Dimensionless equilibrium positions (ascending) of the chain, exposed for tests.
RealVector chain_equilibrium(int n_ions);

// ---------------------------------- system -----------------------------------

// Static description of the ion chain: trap frequency is the unit (nu = 1),
// eta_{jl} = chi_{jl} * Lambda couples ion j to mode l.
struct SystemSpec {
    int n_ions = 0;
    double coupling = 0.0;  // Lambda
    RealVector mode_ratios; // kappa_l
    RealMatrix mode_coeffs; // chi_{jl} (N x M)
    RealMatrix eta;         // chi * Lambda (N x M)

    int n_modes() const { return static_cast<int>(mode_ratios.size()); }

    // Built-in geometry: axial modes of the equal-mass chain.
    static SystemSpec linear_chain(int n_ions, double coupling);
    // Explicit Lamb-Dicke matrix (mixed-species injection); mode ratios still required.
    static SystemSpec from_eta(RealVector mode_ratios, RealMatrix eta, double coupling);

    // Throws std::invalid_argument when column orthonormality (1e-12), kappa ordering
    // or |eta| <= Lambda are violated. from_eta skips the orthonormality check.
    void validate(bool check_orthonormal = true) const;
};

// ---------------------------------- space ------------------------------------

// Basis ordering: spin index is slowest (ion 1 = most significant bit, |0> = down),
// then modes with mode 1 slowest; the phonon number of each mode counts contiguously.
struct FockSpace {
    int n_spins = 0;
    std::vector<int> cutoffs; // per-mode max phonon number, inclusive

    FockSpace() = default;
    FockSpace(int n_spins_, std::vector<int> cutoffs_);

    int n_modes() const { return static_cast<int>(cutoffs.size()); }
    long spin_dim() const { return 1L << n_spins; }
    long motional_dim() const { return mot_dim_; }
    long total_dim() const { return spin_dim() * mot_dim_; }
    long mode_stride(int mode) const { return strides_[static_cast<size_t>(mode)]; }

    long spin_bit(int ion) const { return 1L << (n_spins - 1 - ion); } // ion 0-based

    // phonon occupation of `mode` encoded in motional index m
    int occupation(long m, int mode) const {
        return static_cast<int>((m / strides_[static_cast<size_t>(mode)]) %
                                (cutoffs[static_cast<size_t>(mode)] + 1));
    }

private:
    long mot_dim_ = 1;
    std::vector<long> strides_;
};

// Default truncation for an initial occupation under coupling Lambda:
// n_init + max(margin, ceil(10 * Lambda * sqrt(n_init + 1))), margin = 15 unless overridden.
int default_cutoff(int n_init, double coupling, int margin = 15);

// --------------------------------- operators ---------------------------------

// Matrix over a FockSpace basis (sparse storage; dense() for small dimensions).
struct Operator {
    long dim = 0;
    SpMat mat;

    Operator() = default;
    Operator(long dim_, SpMat m) : dim(dim_), mat(std::move(m)) {}
    explicit Operator(const Matrix& m) : dim(m.rows()), mat(m.sparseView()) {}

    Matrix dense() const { return Matrix(mat); }
    bool is_hermitian(double tol = 1e-10) const;
    bool is_unitary(double tol = 1e-10) const;
};

// Single-mode sideband block D_{l,k}(eta) on one mode ladder (dimension cutoff+1).
// Series of Eq-type sum_{n} (i eta)^{2n+k} a^dag^{n+k} a^n / ((n+k)! n!) for k >= 0,
// summed until the next term is below 1e-16 relative; k < 0 via (-1)^k D_k^dag.
Matrix displacement_block(int order, double eta, int cutoff);

// Phonon-conserving k = 0 block, diagonal.
Matrix displacement_diagonal(double eta, int cutoff);

// Ladder operators on one mode (cutoff+1 dimensional).
Matrix annihilation_block(int cutoff);
Matrix number_block(int cutoff);

struct Subsystem {
    enum class Kind { Spin, Mode } kind;
    int index; // 0-based ion or mode
    static Subsystem spin(int ion) { return {Kind::Spin, ion}; }
    static Subsystem mode(int m) { return {Kind::Mode, m}; }
};

// Tensor product with identity on all other factors, respecting the basis ordering.
Operator embed(const Matrix& block, Subsystem where, const FockSpace& space);

// Identity on the full space.
Operator identity(const FockSpace& space);

// --------------------------------- thermal -----------------------------------

// Per-mode geometric weights P(n) = nbar^n / (1+nbar)^{n+1}, renormalized over the
// truncation. Throws cutoff_too_small if the truncated tail mass exceeds tail_tol.
struct ThermalWeights {
    std::vector<RealVector> per_mode; // renormalized weights per mode
    std::vector<double> captured;     // pre-renormalization mass per mode

    double joint(const std::vector<int>& n) const {
        double p = 1.0;
        for (size_t l = 0; l < per_mode.size(); ++l) p *= per_mode[l](n[l]);
        return p;
    }
};

ThermalWeights thermal_state(const std::vector<double>& nbar, const FockSpace& space,
                             double tail_tol = 1e-8);

} // namespace iongate
