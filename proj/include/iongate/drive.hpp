// drive.hpp — synthesis of driving programs: the robust two-tone scheme, its
// monochromatic precursor, the first-sideband MS baselines, and the Rabi solve.
#pragma once

#include "iongate/fockspace.hpp"
#include "iongate/types.hpp"

#include <map>
#include <tuple>

namespace iongate {

struct Tone {
    cplx amplitude;   // units of nu (through Omega)
    double frequency; // detuning a_m, units of nu
};

enum class GateVariant { Robust, Monochromatic, MsSingleMode, MsAllModes };

const char* variant_name(GateVariant v);
GateVariant variant_from_name(const std::string& name);

struct GateTarget {
    std::pair<int, int> pair{0, 1}; // 0-based addressed ions
    bool all_pairs = false;
    double phi = kPi / 8; // entangling phase of U = exp(i phi sum_{j!=k} sy_j sy_k)
    GateVariant variant = GateVariant::Robust;

    void validate(int n_ions) const;
};

// Key: (addressed-ion slot 0/1, mode l, sideband order k >= 1). Only k >= 1 is stored;
// red partners follow F_{l,-k} = (-1)^k conj(F_{l,k}).
struct DriveProgram {
    using Key = std::tuple<int, int, int>;
    std::map<Key, std::vector<Tone>> entries;
    double gate_time = 0.0;
    double detuning = 0.0;  // base detuning delta the built-in tones are multiples of
    int central_mode = 0;   // bus mode index
    std::string phase_convention = "sideband-resonant/sigma-y";
    std::vector<std::string> warnings;

    // Sum of tones at time t; negative k via the red/blue relation; absent keys give 0.
    cplx evaluate(int ion_slot, int mode, int order, double t) const;

    // Peak physical Rabi rate for an addressed ion: max_t sum_{l,k} |F_{l,k}(t)/eta_{jl}|.
    double peak_rate(int ion_slot, const RealMatrix& pair_eta, int samples = 2048) const;

    bool empty() const { return entries.empty(); }
};

// Smallest positive root of the entangling condition, returned as Omega = delta*sqrt(x).
//   Robust:        -6 x^2 E1 + x (2 + E) = 2 phi / (5 pi)
//   Monochromatic: -3 x^2 E1 + x (2 + E) = phi / pi
//   MS variants:   weak-coupling loop relation x = phi / (2 pi) per driven tone set
// with E1 = sum_j eta_{j,central}^2 and E = sum_{l,j} eta_{jl}^2 over the addressed pair.
// `phi` here is the coefficient of sy x sy in the pair generator. Throws
// infeasible_target (carrying the max attainable phi) when no positive root exists.
double solve_rabi(double delta, const RealMatrix& pair_eta, int central_mode, double phi,
                  GateVariant variant);

// Pair generator angle: GateTarget.phi counts ordered pairs, so the sy x sy
// coefficient of the target unitary is 2*phi. Synthesizers aim at this value.
inline double pair_generator_angle(double phi_target) { return 2.0 * phi_target; }

// Restrict eta to the two addressed ions (2 x M), preserving mode order.
RealMatrix pair_eta(const SystemSpec& system, const GateTarget& target);

DriveProgram synthesize_robust(const SystemSpec& system, const GateTarget& target,
                               double delta, int central_mode = 0);
DriveProgram synthesize_monochromatic(const SystemSpec& system, const GateTarget& target,
                                      double delta, int central_mode = 0);
DriveProgram synthesize_ms(const SystemSpec& system, const GateTarget& target, double delta,
                           int central_mode = 0);
DriveProgram synthesize(const SystemSpec& system, const GateTarget& target, double delta,
                        int central_mode = 0);

// |sum_m A_m prod_{k != m} a_k| for one tone list; repeated frequencies are rejected.
double fourier_constraint_residual(const std::vector<Tone>& tones);

} // namespace iongate
