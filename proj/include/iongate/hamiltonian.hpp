// hamiltonian.hpp — interaction-picture Hamiltonian assembly at three fidelity
// levels, with static frequency errors folded in as drive-resonance mismatches.
#pragma once

#include "iongate/drive.hpp"
#include "iongate/fockspace.hpp"

namespace iongate {

enum class HamiltonianLevel {
    ExactSeries,       // full sideband series blocks, any stored program key
    SelectedSidebands, // first sideband of the bus mode + second sidebands of all modes
    CubicTruncation    // series truncated at third order in eta
};

const char* level_name(HamiltonianLevel level);
HamiltonianLevel level_from_name(const std::string& name);

// Per-mode rates for quanta loss (a), gain (a^dag) and dephasing (a^dag a).
struct NoiseSpec {
    std::vector<double> gamma_minus;
    std::vector<double> gamma_plus;
    std::vector<double> gamma_dephase;

    static NoiseSpec none(int n_modes) {
        return {std::vector<double>(n_modes, 0.0), std::vector<double>(n_modes, 0.0),
                std::vector<double>(n_modes, 0.0)};
    }
    static NoiseSpec uniform(double gamma, int n_modes) {
        return {std::vector<double>(n_modes, gamma), std::vector<double>(n_modes, gamma),
                std::vector<double>(n_modes, gamma)};
    }
    bool is_zero() const;
    void validate(int n_modes) const;
};

// Static shifts of mode frequencies (per mode) and the common spin frequency.
// In the sideband-resonant frame they appear as residual phases e^{-i k eps_nu t}
// on each order-k drive term and e^{-i eps_omega t} on each raising-operator branch.
struct ErrorShift {
    std::vector<double> eps_nu; // per mode
    double eps_omega = 0.0;

    static ErrorShift none(int n_modes) { return {std::vector<double>(n_modes, 0.0), 0.0}; }
    bool spin_shift() const { return eps_omega != 0.0; }
};

// One Hermitian component of H(t): p_j(t) (x) [ c(t) M + conj(c(t)) M^dag ] with
// p_j(t) = cos(eps_omega t) sy_j - sin(eps_omega t) sx_j and M a fixed banded
// motional operator. c(t) is a tone sum; eps_nu shifts are folded into the tone
// frequencies.
struct BandOp {
    std::vector<int> shifts; // phonon change per mode
    long offset = 0;         // sum of shifts * strides (>= 0 for stored blue terms)
    Vector coef;             // source-indexed coefficients; zero where a shift overflows
};

struct DriveTerm {
    int ion_slot = 0; // 0/1 within the addressed pair
    BandOp band;
    std::vector<Tone> tones;

    cplx coefficient(double t) const {
        cplx c = 0.0;
        for (const Tone& tone : tones) c += tone.amplitude * std::exp(kI * tone.frequency * t);
        return c;
    }
};

struct HamiltonianTerms {
    std::vector<DriveTerm> terms;
    FockSpace space;
    double eps_omega = 0.0;
    double gate_time = 0.0;

    bool spin_diagonal() const { return eps_omega == 0.0; }
};

// Build the drive terms for an addressed pair. pair_eta is 2 x M. Throws
// std::invalid_argument when the space cannot host the stored sidebands or when
// SelectedSidebands meets a key outside its structure.
HamiltonianTerms build_terms(const DriveProgram& program, const RealMatrix& pair_eta,
                             const FockSpace& space, HamiltonianLevel level,
                             const ErrorShift& shifts);

// Dense/sparse snapshot of H(t) on the full pair-spin (x) motional space.
Operator hamiltonian(double t, const DriveProgram& program, const RealMatrix& pair_eta,
                     const FockSpace& space, HamiltonianLevel level, const ErrorShift& shifts);
Operator hamiltonian(double t, const HamiltonianTerms& ht);

// --- fast application paths -------------------------------------------------

// out += weight * (c M + conj(c) M^dag) v  on a motional-space vector
void apply_band(const BandOp& band, cplx c, double weight, const Vector& v, Vector& out);

// y-basis blocks: H_s(t) u = sum_t s[ion] (c M + c* M^dag) u, valid when eps_omega = 0.
void apply_block(const HamiltonianTerms& ht, const std::array<double, 2>& signs, double t,
                 const Vector& v, Vector& out);

// Full-space apply on a (spin_dim x motional_dim) column-major state.
void apply_full(const HamiltonianTerms& ht, double t, const Vector& v, Vector& out);

// Snapshot of term scalars at fixed time(s); used by the integrators so a linear
// combination of H at several times stays in the same term structure.
struct TermSnapshot {
    struct Entry {
        const DriveTerm* term;
        cplx cy; // coefficient on sy (x) (cy M + cy* M^dag)
        cplx cx; // coefficient on sx (x) (cx M + cx* M^dag)
    };
    std::vector<Entry> entries;
    const HamiltonianTerms* ht = nullptr;

    void apply_block(const std::array<double, 2>& signs, const Vector& v, Vector& out) const;
    void apply_full(const Vector& v, Vector& out) const;
};

TermSnapshot snapshot(const HamiltonianTerms& ht, std::initializer_list<std::pair<double, double>>
                                                      weighted_times);

} // namespace iongate
