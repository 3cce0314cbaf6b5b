#include "iongate/drive.hpp"

#include <algorithm>
#include <cmath>

namespace iongate {

const char* variant_name(GateVariant v) {
    switch (v) {
        case GateVariant::Robust: return "robust";
        case GateVariant::Monochromatic: return "monochromatic";
        case GateVariant::MsSingleMode: return "ms_single_mode";
        default: return "ms_all_modes";
    }
}

GateVariant variant_from_name(const std::string& name) {
    if (name == "robust") return GateVariant::Robust;
    if (name == "monochromatic") return GateVariant::Monochromatic;
    if (name == "ms_single_mode") return GateVariant::MsSingleMode;
    if (name == "ms_all_modes") return GateVariant::MsAllModes;
    throw std::invalid_argument("unknown gate variant: " + name);
}

void GateTarget::validate(int n_ions) const {
    if (!(phi > 0.0) || phi > kPi / 2 + 1e-15)
        throw std::invalid_argument("GateTarget: phi must lie in (0, pi/2]");
    if (pair.first == pair.second)
        throw std::invalid_argument("GateTarget: pair indices must be distinct");
    if (pair.first < 0 || pair.second < 0 || pair.first >= n_ions || pair.second >= n_ions)
        throw std::invalid_argument("GateTarget: pair indices out of range");
}

cplx DriveProgram::evaluate(int ion_slot, int mode, int order, double t) const {
    if (order == 0) return 0.0;
    if (order < 0) {
        const cplx blue = evaluate(ion_slot, mode, -order, t);
        const double sign = ((-order) % 2 == 0) ? 1.0 : -1.0;
        return sign * std::conj(blue);
    }
    const auto it = entries.find({ion_slot, mode, order});
    if (it == entries.end()) return 0.0;
    cplx f = 0.0;
    for (const Tone& tone : it->second)
        f += tone.amplitude * std::exp(kI * tone.frequency * t);
    return f;
}

double DriveProgram::peak_rate(int ion_slot, const RealMatrix& eta2, int samples) const {
    double peak = 0.0;
    for (int s = 0; s <= samples; ++s) {
        const double t = gate_time * s / samples;
        double rate = 0.0;
        for (const auto& [key, tones] : entries) {
            const auto& [slot, mode, order] = key;
            (void)order;
            if (slot != ion_slot) continue;
            const double eta = eta2(slot, mode);
            if (eta == 0.0) continue;
            cplx f = 0.0;
            for (const Tone& tone : tones) f += tone.amplitude * std::exp(kI * tone.frequency * t);
            rate += std::abs(f) / std::abs(eta);
        }
        peak = std::max(peak, rate);
    }
    return peak;
}

RealMatrix pair_eta(const SystemSpec& system, const GateTarget& target) {
    target.validate(system.n_ions);
    RealMatrix out(2, system.n_modes());
    out.row(0) = system.eta.row(target.pair.first);
    out.row(1) = system.eta.row(target.pair.second);
    return out;
}

namespace {

// smallest positive root of -q x^2 E1 + x (2 + E) = rhs
double quadratic_condition_root(double q_coeff, double e1, double e_all, double rhs,
                                double phi_scale) {
    const double b = 2.0 + e_all;
    if (rhs <= 0.0) return 0.0;
    if (q_coeff * e1 == 0.0) return rhs / b;
    const double disc = b * b - 4.0 * q_coeff * e1 * rhs;
    if (disc < 0.0) {
        // rhs at disc = 0 marks the largest reachable entangling phase
        const double rhs_max = b * b / (4.0 * q_coeff * e1);
        throw infeasible_target("solve_rabi: no positive real root; requested phase too large",
                                rhs_max * phi_scale);
    }
    // cancellation-free form of (b - sqrt(disc)) / (2 q E1)
    return 2.0 * rhs / (b + std::sqrt(disc));
}

} // namespace

double solve_rabi(double delta, const RealMatrix& eta2, int central_mode, double phi,
                  GateVariant variant) {
    if (delta <= 0.0) throw std::invalid_argument("solve_rabi: delta must be > 0");
    if (phi < 0.0) throw std::invalid_argument("solve_rabi: phi must be >= 0");
    if (phi == 0.0) return 0.0;
    const double e1 = eta2.col(central_mode).squaredNorm();
    const double e_all = eta2.squaredNorm();
    double x = 0.0;
    switch (variant) {
        case GateVariant::Robust:
            x = quadratic_condition_root(6.0, e1, e_all, 2.0 * phi / (5.0 * kPi),
                                         5.0 * kPi / 2.0);
            break;
        case GateVariant::Monochromatic:
            x = quadratic_condition_root(3.0, e1, e_all, phi / kPi, kPi);
            break;
        case GateVariant::MsSingleMode:
        case GateVariant::MsAllModes:
            x = phi / (2.0 * kPi); // weak-coupling loop relation
            break;
    }
    return delta * std::sqrt(x);
}

namespace {

// k = 2 tones per Eq.-(12b/c) shape: s_{1l} Omega (eta_tilde_l / eta_{jl}) e^{i delta t}
void add_second_sidebands(DriveProgram& prog, const RealMatrix& eta2, double omega,
                          double delta, double tilde_scale) {
    const int n_modes = static_cast<int>(eta2.cols());
    for (int l = 0; l < n_modes; ++l) {
        const double e1 = eta2(0, l);
        const double e2 = eta2(1, l);
        const double tilde = tilde_scale * std::sqrt(e1 * e1 + e2 * e2);
        const double s1 = (e1 > 0) ? 1.0 : (e1 < 0 ? -1.0 : 0.0);
        for (int slot = 0; slot < 2; ++slot) {
            const double eta = eta2(slot, l);
            if (eta == 0.0) {
                prog.warnings.push_back("mode " + std::to_string(l + 1) + " ion slot " +
                                        std::to_string(slot + 1) +
                                        ": eta vanishes; second sideband dropped");
                continue;
            }
            prog.entries[{slot, l, 2}] = {{cplx(s1 * omega * tilde / eta, 0.0), delta}};
        }
    }
}

} // namespace

DriveProgram synthesize_robust(const SystemSpec& system, const GateTarget& target,
                               double delta, int central_mode) {
    if (target.variant != GateVariant::Robust)
        throw std::invalid_argument("synthesize_robust: target variant mismatch");
    const RealMatrix eta2 = pair_eta(system, target);
    const double phi_gen = pair_generator_angle(target.phi);
    const double omega = solve_rabi(delta, eta2, central_mode, phi_gen, GateVariant::Robust);

    DriveProgram prog;
    prog.gate_time = 2.0 * kPi / delta;
    prog.detuning = delta;
    prog.central_mode = central_mode;
    for (int slot = 0; slot < 2; ++slot)
        prog.entries[{slot, central_mode, 1}] = {{cplx(omega, 0.0), 2.0 * delta},
                                                 {cplx(-1.5 * omega, 0.0), 3.0 * delta}};
    add_second_sidebands(prog, eta2, omega, delta, std::sqrt(5.0) / 2.0);
    return prog;
}

DriveProgram synthesize_monochromatic(const SystemSpec& system, const GateTarget& target,
                                      double delta, int central_mode) {
    if (target.variant != GateVariant::Monochromatic)
        throw std::invalid_argument("synthesize_monochromatic: target variant mismatch");
    const RealMatrix eta2 = pair_eta(system, target);
    const double phi_gen = pair_generator_angle(target.phi);
    const double omega =
        solve_rabi(delta, eta2, central_mode, phi_gen, GateVariant::Monochromatic);

    DriveProgram prog;
    prog.gate_time = 2.0 * kPi / delta;
    prog.detuning = delta;
    prog.central_mode = central_mode;
    for (int slot = 0; slot < 2; ++slot)
        prog.entries[{slot, central_mode, 1}] = {{cplx(omega, 0.0), 2.0 * delta}};
    add_second_sidebands(prog, eta2, omega, delta, std::sqrt(2.0) / 2.0);
    return prog;
}

DriveProgram synthesize_ms(const SystemSpec& system, const GateTarget& target, double delta,
                           int central_mode) {
    if (target.variant != GateVariant::MsSingleMode && target.variant != GateVariant::MsAllModes)
        throw std::invalid_argument("synthesize_ms: target variant mismatch");
    const RealMatrix eta2 = pair_eta(system, target);
    const double phi_gen = pair_generator_angle(target.phi);

    DriveProgram prog;
    prog.gate_time = 2.0 * kPi / delta;
    prog.detuning = delta;
    prog.central_mode = central_mode;
    if (phi_gen == 0.0) return prog;

    if (target.variant == GateVariant::MsSingleMode) {
        const double omega =
            solve_rabi(delta, eta2, central_mode, phi_gen, GateVariant::MsSingleMode);
        for (int slot = 0; slot < 2; ++slot)
            prog.entries[{slot, central_mode, 1}] = {{cplx(omega, 0.0), delta}};
        return prog;
    }

    // all modes: detuning d*delta on mode d so every loop closes at T; amplitudes split
    // the geometric phase equally, 2 Omega_d^2 T / a_d = phi_gen / M per mode.
    const int n_modes = system.n_modes();
    for (int d = 0; d < n_modes; ++d) {
        const double a_d = delta * (d + 1);
        const double omega_d = std::sqrt(phi_gen * a_d / (2.0 * n_modes * prog.gate_time));
        if (!std::isfinite(omega_d))
            throw infeasible_target("synthesize_ms: singular amplitude system", 0.0);
        for (int slot = 0; slot < 2; ++slot)
            prog.entries[{slot, d, 1}] = {{cplx(omega_d, 0.0), a_d}};
    }
    return prog;
}

DriveProgram synthesize(const SystemSpec& system, const GateTarget& target, double delta,
                        int central_mode) {
    switch (target.variant) {
        case GateVariant::Robust: return synthesize_robust(system, target, delta, central_mode);
        case GateVariant::Monochromatic:
            return synthesize_monochromatic(system, target, delta, central_mode);
        default: return synthesize_ms(system, target, delta, central_mode);
    }
}

double fourier_constraint_residual(const std::vector<Tone>& tones) {
    if (tones.empty()) throw std::invalid_argument("fourier_constraint_residual: no tones");
    for (size_t m = 0; m < tones.size(); ++m) {
        if (tones[m].frequency == 0.0)
            throw std::invalid_argument("fourier_constraint_residual: zero tone frequency");
        for (size_t k = m + 1; k < tones.size(); ++k)
            if (tones[m].frequency == tones[k].frequency)
                throw std::invalid_argument(
                    "fourier_constraint_residual: repeated frequencies; merge tones first");
    }
    cplx sum = 0.0;
    for (size_t m = 0; m < tones.size(); ++m) {
        cplx term = tones[m].amplitude;
        for (size_t k = 0; k < tones.size(); ++k)
            if (k != m) term *= tones[k].frequency;
        sum += term;
    }
    return std::abs(sum);
}

} // namespace iongate
