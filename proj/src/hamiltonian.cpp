#include "iongate/hamiltonian.hpp"

#include <array>
#include <cmath>

namespace iongate {

const char* level_name(HamiltonianLevel level) {
    switch (level) {
        case HamiltonianLevel::ExactSeries: return "exact_series";
        case HamiltonianLevel::SelectedSidebands: return "selected_sidebands";
        default: return "cubic_truncation";
    }
}

HamiltonianLevel level_from_name(const std::string& name) {
    if (name == "exact_series") return HamiltonianLevel::ExactSeries;
    if (name == "selected_sidebands") return HamiltonianLevel::SelectedSidebands;
    if (name == "cubic_truncation") return HamiltonianLevel::CubicTruncation;
    throw std::invalid_argument("unknown hamiltonian level: " + name);
}

bool NoiseSpec::is_zero() const {
    for (double g : gamma_minus)
        if (g != 0.0) return false;
    for (double g : gamma_plus)
        if (g != 0.0) return false;
    for (double g : gamma_dephase)
        if (g != 0.0) return false;
    return true;
}

void NoiseSpec::validate(int n_modes) const {
    const auto check = [n_modes](const std::vector<double>& g, const char* what) {
        if (g.size() != static_cast<size_t>(n_modes))
            throw std::invalid_argument(std::string("NoiseSpec: ") + what +
                                        " must have one rate per mode");
        for (double v : g)
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument(std::string("NoiseSpec: ") + what +
                                            " rates must be finite and >= 0");
    };
    check(gamma_minus, "gamma_minus");
    check(gamma_plus, "gamma_plus");
    check(gamma_dephase, "gamma_dephase");
}

namespace {

// product coefficient array for a one-mode band times diagonals on the others
BandOp make_band(const FockSpace& space, int shifted_mode, int shift,
                 const std::vector<Vector>& mode_factors) {
    BandOp band;
    band.shifts.assign(static_cast<size_t>(space.n_modes()), 0);
    band.shifts[static_cast<size_t>(shifted_mode)] = shift;
    band.offset = shift * space.mode_stride(shifted_mode);
    const long dim = space.motional_dim();
    band.coef = Vector::Zero(dim);
    for (long m = 0; m < dim; ++m) {
        cplx c = 1.0;
        bool valid = true;
        for (int l = 0; l < space.n_modes(); ++l) {
            const int n = space.occupation(m, l);
            if (n + band.shifts[static_cast<size_t>(l)] > space.cutoffs[static_cast<size_t>(l)]) {
                valid = false;
                break;
            }
            c *= mode_factors[static_cast<size_t>(l)](n);
        }
        band.coef(m) = valid ? c : cplx(0.0);
    }
    return band;
}

std::vector<Tone> shifted_tones(const std::vector<Tone>& tones, cplx scale, int order,
                                double eps_nu) {
    std::vector<Tone> out;
    out.reserve(tones.size());
    for (const Tone& t : tones)
        out.push_back({scale * t.amplitude, t.frequency - order * eps_nu});
    return out;
}

} // namespace

HamiltonianTerms build_terms(const DriveProgram& program, const RealMatrix& pair_eta,
                             const FockSpace& space, HamiltonianLevel level,
                             const ErrorShift& shifts) {
    const int n_modes = space.n_modes();
    if (pair_eta.cols() != n_modes)
        throw std::invalid_argument("build_terms: eta/space mode count mismatch");
    if (shifts.eps_nu.size() != static_cast<size_t>(n_modes))
        throw std::invalid_argument("build_terms: one eps_nu per mode required");
    if (space.n_spins != 2)
        throw std::invalid_argument("build_terms: pair-addressed space must hold 2 spins");

    HamiltonianTerms ht;
    ht.space = space;
    ht.eps_omega = shifts.eps_omega;
    ht.gate_time = program.gate_time;

    for (const auto& [key, tones] : program.entries) {
        const auto& [slot, mode, order] = key;
        if (mode < 0 || mode >= n_modes)
            throw std::invalid_argument("build_terms: program mode outside the space");
        if (space.cutoffs[static_cast<size_t>(mode)] < order)
            throw std::invalid_argument("build_terms: cutoff too small for sideband order");
        const double eta = pair_eta(slot, mode);
        if (eta == 0.0)
            throw std::invalid_argument("build_terms: driven mode with vanishing eta");
        if (level == HamiltonianLevel::SelectedSidebands &&
            !(order == 1 && mode == program.central_mode) && order != 2)
            throw std::invalid_argument(
                "build_terms: selected-sidebands level admits only the bus first sideband "
                "and second sidebands");

        DriveTerm term;
        term.ion_slot = slot;
        if (level == HamiltonianLevel::CubicTruncation) {
            if (order == 1) {
                // i F sy a_c^dag (1 - eta_c^2/2 n_c - sum_{l != c} eta_l^2 n_l);
                // the bracket does not factor over modes, assemble coef directly
                BandOp band;
                band.shifts.assign(static_cast<size_t>(n_modes), 0);
                band.shifts[static_cast<size_t>(mode)] = 1;
                band.offset = space.mode_stride(mode);
                const long dim = space.motional_dim();
                band.coef = Vector::Zero(dim);
                for (long m = 0; m < dim; ++m) {
                    const int nc = space.occupation(m, mode);
                    if (nc + 1 > space.cutoffs[static_cast<size_t>(mode)]) continue;
                    double corr = 1.0 - 0.5 * pair_eta(slot, mode) * pair_eta(slot, mode) * nc;
                    for (int l = 0; l < n_modes; ++l) {
                        if (l == mode) continue;
                        const double el = pair_eta(slot, l);
                        corr -= el * el * space.occupation(m, l);
                    }
                    band.coef(m) = std::sqrt(nc + 1.0) * corr;
                }
                term.band = std::move(band);
                term.tones = shifted_tones(tones, kI, order,
                                           shifts.eps_nu[static_cast<size_t>(mode)]);
            } else if (order == 2) {
                // -(eta/2) F sy a_l^dag^2
                BandOp band;
                band.shifts.assign(static_cast<size_t>(n_modes), 0);
                band.shifts[static_cast<size_t>(mode)] = 2;
                band.offset = 2 * space.mode_stride(mode);
                const long dim = space.motional_dim();
                band.coef = Vector::Zero(dim);
                for (long m = 0; m < dim; ++m) {
                    const int nl = space.occupation(m, mode);
                    if (nl + 2 > space.cutoffs[static_cast<size_t>(mode)]) continue;
                    band.coef(m) = std::sqrt((nl + 1.0) * (nl + 2.0));
                }
                term.band = std::move(band);
                term.tones = shifted_tones(tones, cplx(-0.5 * eta, 0.0), order,
                                           shifts.eps_nu[static_cast<size_t>(mode)]);
            } else {
                throw std::invalid_argument(
                    "build_terms: cubic truncation covers first and second sidebands only");
            }
        } else {
            // exact series blocks: D_{l,k}(eta_l) on the driven mode, D_{l',0} spectators
            std::vector<Vector> factors;
            for (int l = 0; l < n_modes; ++l) {
                const int cut = space.cutoffs[static_cast<size_t>(l)];
                const double el = pair_eta(slot, l);
                Vector f(cut + 1);
                if (l == mode) {
                    const Matrix d = displacement_block(order, el, cut);
                    for (int n = 0; n + order <= cut; ++n) f(n) = d(n + order, n);
                    for (int n = cut - order + 1; n <= cut; ++n) f(n) = 0.0;
                } else {
                    const Matrix d0 = displacement_diagonal(el, cut);
                    for (int n = 0; n <= cut; ++n) f(n) = d0(n, n);
                }
                factors.push_back(std::move(f));
            }
            term.band = make_band(space, mode, order, factors);
            term.tones = shifted_tones(tones, cplx(1.0 / eta, 0.0), order,
                                       shifts.eps_nu[static_cast<size_t>(mode)]);
        }
        ht.terms.push_back(std::move(term));
    }
    return ht;
}

// --- application paths --------------------------------------------------------

void apply_band(const BandOp& band, cplx c, double weight, const Vector& v, Vector& out) {
    const long dim = v.size();
    const long off = band.offset;
    const cplx wc = weight * c;
    const cplx wcc = weight * std::conj(c);
    const cplx* coef = band.coef.data();
    const cplx* src = v.data();
    cplx* dst = out.data();
    for (long i = 0; i + off < dim; ++i) {
        dst[i + off] += wc * coef[i] * src[i];
        dst[i] += wcc * std::conj(coef[i]) * src[i + off];
    }
}

void apply_block(const HamiltonianTerms& ht, const std::array<double, 2>& signs, double t,
                 const Vector& v, Vector& out) {
    for (const DriveTerm& term : ht.terms)
        apply_band(term.band, term.coefficient(t), signs[static_cast<size_t>(term.ion_slot)], v,
                   out);
}

namespace {

// distribute w into the flipped spin components of out with sy/sx matrix elements
void spin_mix(const FockSpace& space, int ion_slot, long spin_b, const Vector& wy,
              const Vector& wx, Vector& out) {
    const long mot = space.motional_dim();
    const long bit = space.spin_bit(ion_slot) ; // within spin index
    const bool up = (spin_b & bit) != 0;
    const long spin_a = spin_b ^ bit;
    // sy: <1|sy|0> = -i, <0|sy|1> = +i  (sy = i(s- - s+)); sx: both +1
    const cplx ymat = up ? cplx(0, 1) : cplx(0, -1);
    out.segment(spin_a * mot, mot) += ymat * wy + wx;
}

} // namespace

void apply_full(const HamiltonianTerms& ht, double t, const Vector& v, Vector& out) {
    const TermSnapshot snap = snapshot(ht, {{1.0, t}});
    snap.apply_full(v, out);
}

void TermSnapshot::apply_block(const std::array<double, 2>& signs, const Vector& v,
                               Vector& out) const {
    for (const Entry& e : entries)
        apply_band(e.term->band, e.cy, signs[static_cast<size_t>(e.term->ion_slot)], v, out);
}

void TermSnapshot::apply_full(const Vector& v, Vector& out) const {
    const FockSpace& space = ht->space;
    const long mot = space.motional_dim();
    Vector m1(mot), m2(mot), wy(mot), wx(mot);
    for (const Entry& e : entries) {
        const BandOp& band = e.term->band;
        for (long b = 0; b < space.spin_dim(); ++b) {
            const auto vb = v.segment(b * mot, mot);
            m1.setZero();
            m2.setZero();
            const long off = band.offset;
            const cplx* coef = band.coef.data();
            for (long i = 0; i + off < mot; ++i) {
                m1[i + off] += coef[i] * vb[i];          // M v
                m2[i] += std::conj(coef[i]) * vb[i + off]; // M^dag v
            }
            wy = e.cy * m1 + std::conj(e.cy) * m2;
            if (e.cx != cplx(0.0)) {
                wx = e.cx * m1 + std::conj(e.cx) * m2;
            } else {
                wx.setZero();
            }
            spin_mix(space, e.term->ion_slot, b, wy, wx, out);
        }
    }
}

TermSnapshot snapshot(const HamiltonianTerms& ht,
                      std::initializer_list<std::pair<double, double>> weighted_times) {
    TermSnapshot snap;
    snap.ht = &ht;
    snap.entries.reserve(ht.terms.size());
    for (const DriveTerm& term : ht.terms) {
        TermSnapshot::Entry e{&term, 0.0, 0.0};
        for (const auto& [w, t] : weighted_times) {
            const cplx c = term.coefficient(t);
            if (ht.eps_omega == 0.0) {
                e.cy += w * c;
            } else {
                e.cy += w * c * std::cos(ht.eps_omega * t);
                e.cx += -w * c * std::sin(ht.eps_omega * t);
            }
        }
        snap.entries.push_back(e);
    }
    return snap;
}

// --- dense assembly -------------------------------------------------------------

Operator hamiltonian(double t, const HamiltonianTerms& ht) {
    const long dim = ht.space.total_dim();
    Vector basis = Vector::Zero(dim);
    Vector col = Vector::Zero(dim);
    std::vector<Eigen::Triplet<cplx>> trips;
    const TermSnapshot snap = snapshot(ht, {{1.0, t}});
    for (long j = 0; j < dim; ++j) {
        basis.setZero();
        basis(j) = 1.0;
        col.setZero();
        snap.apply_full(basis, col);
        for (long i = 0; i < dim; ++i)
            if (col(i) != cplx(0.0)) trips.emplace_back(i, j, col(i));
    }
    SpMat m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    return Operator(dim, std::move(m));
}

Operator hamiltonian(double t, const DriveProgram& program, const RealMatrix& pair_eta,
                     const FockSpace& space, HamiltonianLevel level, const ErrorShift& shifts) {
    const HamiltonianTerms ht = build_terms(program, pair_eta, space, level, shifts);
    return hamiltonian(t, ht);
}

} // namespace iongate
