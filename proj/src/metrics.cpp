#include "iongate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iongate {

// --- fidelity ---------------------------------------------------------------------

FidelityResult gate_fidelity_full(const SpinChannel& channel, const Matrix& target) {
    const int d = channel.d;
    if (target.rows() != d || target.cols() != d)
        throw std::invalid_argument("gate_fidelity: target dimension mismatch");
    cplx sum = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            sum += (target.adjoint() * channel.at(a, b) * target)(a, b);
    FidelityResult res;
    res.fidelity = std::real(sum) / (d * d);
    res.imag_residue = std::abs(std::imag(sum)) / (d * d);
    return res;
}

double gate_fidelity(const SpinChannel& channel, const Matrix& target) {
    return gate_fidelity_full(channel, target).fidelity;
}

double thermal_fidelity(const std::map<std::vector<int>, double>& per_fock,
                        const std::function<double(const std::vector<int>&)>& weight,
                        double min_mass) {
    double mass = 0.0;
    double acc = 0.0;
    for (const auto& [n, f] : per_fock) {
        const double p = weight(n);
        mass += p;
        acc += p * f;
    }
    if (mass < min_mass)
        throw needs_more_states("thermal_fidelity: captured mass " + std::to_string(mass) +
                                    " below the required support",
                                min_mass - mass);
    return acc / mass;
}

// --- process matrix ----------------------------------------------------------------

ProcessMatrix process_matrix(const DyadMap& delta_map, double warn_residual) {
    const Matrix sy = sigma_y2();
    const Matrix id2 = Matrix::Identity(2, 2);
    const std::array<Matrix, 4> basis = {kron(id2, id2), kron(sy, id2), kron(id2, sy),
                                         kron(sy, sy)};
    Matrix system(256, 16);
    Vector rhs(256);
    long row = 0;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            const Matrix& delta = delta_map(a, b);
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    for (int m = 0; m < 4; ++m)
                        for (int n = 0; n < 4; ++n)
                            system(row, m * 4 + n) = basis[static_cast<size_t>(m)](i, a) *
                                                     std::conj(basis[static_cast<size_t>(n)](j, b));
                    rhs(row) = delta(i, j);
                    ++row;
                }
            }
        }
    }
    const Vector x = system.colPivHouseholderQr().solve(rhs);
    ProcessMatrix out;
    out.chi.resize(4, 4);
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) out.chi(m, n) = x(m * 4 + n);
    out.chi = 0.5 * (out.chi + out.chi.adjoint()).eval();
    out.residual = (system * x - rhs).norm();
    out.consistent = out.residual <= warn_residual;
    return out;
}

// --- tone / trig-polynomial algebra ---------------------------------------------------

namespace {

constexpr double kFreqTol = 1e-12;

// finite sum of c * e^{i w t} terms with exact integrals
class TrigPoly {
public:
    void add(double freq, cplx coef) {
        for (auto& [w, c] : terms_) {
            if (std::abs(w - freq) <= kFreqTol) {
                c += coef;
                return;
            }
        }
        terms_.emplace_back(freq, coef);
    }

    TrigPoly operator*(const TrigPoly& o) const {
        TrigPoly out;
        for (const auto& [w1, c1] : terms_)
            for (const auto& [w2, c2] : o.terms_) out.add(w1 + w2, c1 * c2);
        return out;
    }

    TrigPoly conjugate() const {
        TrigPoly out;
        for (const auto& [w, c] : terms_) out.add(-w, std::conj(c));
        return out;
    }

    cplx integral(double t_final) const {
        cplx acc = 0.0;
        for (const auto& [w, c] : terms_) {
            if (std::abs(w) <= kFreqTol)
                acc += c * t_final;
            else
                acc += c * (std::exp(kI * w * t_final) - 1.0) / (kI * w);
        }
        return acc;
    }

    cplx eval(double t) const {
        cplx acc = 0.0;
        for (const auto& [w, c] : terms_) acc += c * std::exp(kI * w * t);
        return acc;
    }

private:
    std::vector<std::pair<double, cplx>> terms_;
};

bool has_zero_frequency(const std::vector<Tone>& tones) {
    for (const Tone& t : tones)
        if (std::abs(t.frequency) <= kFreqTol) return true;
    return false;
}

TrigPoly tone_poly(const std::vector<Tone>& tones) {
    TrigPoly f;
    for (const Tone& t : tones) f.add(t.frequency, t.amplitude);
    return f;
}

// alpha(t) = int_0^t F, valid for any tone set (zero-frequency tones give A t)
cplx alpha_eval(const std::vector<Tone>& tones, double t) {
    cplx acc = 0.0;
    for (const Tone& tn : tones) {
        if (std::abs(tn.frequency) <= kFreqTol)
            acc += tn.amplitude * t;
        else
            acc += tn.amplitude * (std::exp(kI * tn.frequency * t) - 1.0) / (kI * tn.frequency);
    }
    return acc;
}

TrigPoly alpha_poly(const std::vector<Tone>& tones) {
    TrigPoly a;
    for (const Tone& tn : tones) {
        a.add(tn.frequency, tn.amplitude / (kI * tn.frequency));
        a.add(0.0, -tn.amplitude / (kI * tn.frequency));
    }
    return a;
}

// composite 12-point Gauss-Legendre on [0, t_final]
cplx quad_integral(const std::function<cplx(double)>& f, double t_final, int panels = 192) {
    static const double xs[6] = {0.1252334085114689, 0.3678314989981802, 0.5873179542866175,
                                 0.7699026741943047, 0.9041172563704749, 0.9815606342467192};
    static const double ws[6] = {0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
                                 0.1600783285433462, 0.1069393259953184, 0.0471753363865118};
    cplx acc = 0.0;
    const double h = t_final / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (int k = 0; k < 6; ++k) {
            acc += ws[k] * f(mid + 0.5 * h * xs[k]);
            acc += ws[k] * f(mid - 0.5 * h * xs[k]);
        }
    }
    return acc * (0.5 * h);
}

} // namespace

CostVector heating_costs(const std::array<std::vector<Tone>, 2>& f11_tones, double gate_time,
                         double agree_tol) {
    const bool closed_ok =
        !has_zero_frequency(f11_tones[0]) && !has_zero_frequency(f11_tones[1]);

    // pointwise products of the integrated drives under one outer integral
    const auto quad_cost = [&](const std::function<cplx(double, const std::array<cplx, 2>&)>&
                                   integrand) {
        return quad_integral(
            [&](double t) {
                const std::array<cplx, 2> a = {alpha_eval(f11_tones[0], t),
                                               alpha_eval(f11_tones[1], t)};
                return integrand(t, a);
            },
            gate_time);
    };

    std::array<cplx, 9> quad{};
    {
        // index pairs (i, j), i != j; magnitudes maximized afterwards
        const auto max2 = [&](const std::function<cplx(const std::array<cplx, 2>&, int, int)>& f,
                              int slot) {
            cplx v01 = quad_cost([&](double, const std::array<cplx, 2>& a) { return f(a, 0, 1); });
            cplx v10 = quad_cost([&](double, const std::array<cplx, 2>& a) { return f(a, 1, 0); });
            quad[static_cast<size_t>(slot)] = std::abs(v01) >= std::abs(v10) ? v01 : v10;
        };
        max2([](const std::array<cplx, 2>& a, int i, int) { return a[static_cast<size_t>(i)]; }, 0);
        max2([](const std::array<cplx, 2>& a, int i, int) {
            return a[static_cast<size_t>(i)] * a[static_cast<size_t>(i)];
        },
             1);
        max2([](const std::array<cplx, 2>& a, int i, int j) {
            return a[static_cast<size_t>(i)] * a[static_cast<size_t>(j)];
        },
             2);
        max2([](const std::array<cplx, 2>& a, int i, int j) {
            return std::norm(a[static_cast<size_t>(i)]) * a[static_cast<size_t>(j)];
        },
             3);
        max2([](const std::array<cplx, 2>& a, int i, int j) {
            const cplx ai2 = a[static_cast<size_t>(i)] * a[static_cast<size_t>(i)];
            const cplx aj2 = a[static_cast<size_t>(j)] * a[static_cast<size_t>(j)];
            return ai2 * std::conj(aj2);
        },
             4);
        max2([](const std::array<cplx, 2>& a, int i, int) {
            return cplx(std::norm(a[static_cast<size_t>(i)]), 0.0);
        },
             5);
        max2([](const std::array<cplx, 2>& a, int i, int j) {
            return a[static_cast<size_t>(i)] * std::conj(a[static_cast<size_t>(j)]);
        },
             6);
        max2([](const std::array<cplx, 2>& a, int i, int j) {
            return cplx(std::norm(a[static_cast<size_t>(i)]) * std::norm(a[static_cast<size_t>(j)]),
                        0.0);
        },
             7);
        max2([](const std::array<cplx, 2>& a, int i, int j) {
            return a[static_cast<size_t>(i)] * a[static_cast<size_t>(i)] *
                   std::conj(a[static_cast<size_t>(j)]);
        },
             8);
    }

    CostVector out;
    out.closed_form = closed_ok;
    if (!closed_ok) {
        for (int k = 0; k < 9; ++k) out.c[static_cast<size_t>(k)] = std::abs(quad[static_cast<size_t>(k)]);
        out.c_max = std::max(out.c[5], out.c[7]);
        return out;
    }

    // closed-form tone algebra
    const std::array<TrigPoly, 2> al = {alpha_poly(f11_tones[0]), alpha_poly(f11_tones[1])};
    const std::array<TrigPoly, 2> alc = {al[0].conjugate(), al[1].conjugate()};
    const auto cmax = [&](const std::function<TrigPoly(int, int)>& make) {
        const cplx v01 = make(0, 1).integral(gate_time);
        const cplx v10 = make(1, 0).integral(gate_time);
        return std::abs(v01) >= std::abs(v10) ? v01 : v10;
    };
    std::array<cplx, 9> cf{};
    cf[0] = cmax([&](int i, int) { return al[static_cast<size_t>(i)]; });
    cf[1] = cmax([&](int i, int) {
        return al[static_cast<size_t>(i)] * al[static_cast<size_t>(i)];
    });
    cf[2] = cmax([&](int i, int j) { return al[static_cast<size_t>(i)] * al[static_cast<size_t>(j)]; });
    cf[3] = cmax([&](int i, int j) {
        return al[static_cast<size_t>(i)] * alc[static_cast<size_t>(i)] * al[static_cast<size_t>(j)];
    });
    cf[4] = cmax([&](int i, int j) {
        return al[static_cast<size_t>(i)] * al[static_cast<size_t>(i)] * alc[static_cast<size_t>(j)] *
               alc[static_cast<size_t>(j)];
    });
    cf[5] = cmax([&](int i, int) {
        return al[static_cast<size_t>(i)] * alc[static_cast<size_t>(i)];
    });
    cf[6] = cmax([&](int i, int j) { return al[static_cast<size_t>(i)] * alc[static_cast<size_t>(j)]; });
    cf[7] = cmax([&](int i, int j) {
        return al[static_cast<size_t>(i)] * alc[static_cast<size_t>(i)] * al[static_cast<size_t>(j)] *
               alc[static_cast<size_t>(j)];
    });
    cf[8] = cmax([&](int i, int j) {
        return al[static_cast<size_t>(i)] * al[static_cast<size_t>(i)] * alc[static_cast<size_t>(j)];
    });

    double scale = 1.0;
    for (int k = 0; k < 9; ++k) scale = std::max(scale, std::abs(cf[static_cast<size_t>(k)]));
    for (int k = 0; k < 9; ++k) {
        const double diff = std::abs(cf[static_cast<size_t>(k)] - quad[static_cast<size_t>(k)]);
        if (diff > agree_tol * scale)
            throw precision_error("heating_costs: closed form and quadrature disagree for c" +
                                      std::to_string(k + 1),
                                  std::abs(cf[static_cast<size_t>(k)]),
                                  std::abs(quad[static_cast<size_t>(k)]));
        out.c[static_cast<size_t>(k)] = std::abs(cf[static_cast<size_t>(k)]);
    }
    out.c_max = std::max(out.c[5], out.c[7]);
    return out;
}

double entangling_phase(const std::vector<Tone>& tones, double gate_time) {
    if (tones.empty()) return 0.0;
    if (!has_zero_frequency(tones)) {
        const TrigPoly prod = tone_poly(tones) * alpha_poly(tones).conjugate();
        return std::imag(prod.integral(gate_time));
    }
    return std::imag(quad_integral(
        [&](double t) {
            cplx f = 0.0;
            for (const Tone& tn : tones) f += tn.amplitude * std::exp(kI * tn.frequency * t);
            return f * std::conj(alpha_eval(tones, t));
        },
        gate_time));
}

// --- minimizer ------------------------------------------------------------------------

namespace {

struct MinimizerContext {
    std::vector<double> freqs;
    double gate_time;
    double phi_pair;
    std::vector<std::vector<double>> null_basis; // of the Fourier constraint

    std::vector<Tone> tones(const std::vector<double>& amps) const {
        std::vector<Tone> t;
        for (size_t m = 0; m < freqs.size(); ++m)
            t.push_back({cplx(amps[m], 0.0), freqs[m]});
        return t;
    }

    // amplitudes from null-space coordinates, scaled onto the phase constraint;
    // returns empty when the direction carries no phase
    std::vector<double> realize(const std::vector<double>& z) const {
        std::vector<double> a(freqs.size(), 0.0);
        for (size_t k = 0; k < null_basis.size(); ++k)
            for (size_t m = 0; m < a.size(); ++m) a[m] += z[k] * null_basis[k][m];
        const double phase2 = 2.0 * entangling_phase(tones(a), gate_time);
        if (!(phase2 > 1e-30)) return {};
        const double lam = std::sqrt(phi_pair / phase2);
        for (double& v : a) v *= lam;
        return a;
    }

    double objective(const std::vector<double>& z) const {
        const std::vector<double> a = realize(z);
        if (a.empty()) return 1e100;
        const CostVector cv =
            heating_costs({tones(a), tones(a)}, gate_time, 1e-8);
        return cv.c_max;
    }
};

// deterministic Nelder-Mead
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x0, double scale, int max_iter) {
    const size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (size_t i = 0; i < n; ++i) simplex[i + 1][i] += scale;
    std::vector<double> fv(n + 1);
    for (size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

    const auto order = [&]() {
        std::vector<size_t> idx(n + 1);
        for (size_t i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (size_t i : idx) {
            s2.push_back(simplex[i]);
            f2.push_back(fv[i]);
        }
        simplex = std::move(s2);
        fv = std::move(f2);
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        order();
        if (std::abs(fv[n] - fv[0]) < 1e-14 * (std::abs(fv[0]) + 1e-30)) break;
        std::vector<double> centroid(n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / n;
        const auto lerp = [&](double c) {
            std::vector<double> x(n);
            for (size_t k = 0; k < n; ++k) x[k] = centroid[k] + c * (centroid[k] - simplex[n][k]);
            return x;
        };
        const std::vector<double> xr = lerp(1.0);
        const double fr = f(xr);
        if (fr < fv[0]) {
            const std::vector<double> xe = lerp(2.0);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            const std::vector<double> xc = lerp(fr < fv[n] ? 0.5 : -0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[n])) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                for (size_t i = 1; i <= n; ++i) {
                    for (size_t k = 0; k < n; ++k)
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    order();
    return simplex[0];
}

} // namespace

MinimizeResult minimize_heating_cost(const std::vector<double>& frequencies, double gate_time,
                                     double phi_pair) {
    const size_t m = frequencies.size();
    if (m < 1) throw std::invalid_argument("minimize_heating_cost: empty frequency family");
    for (size_t i = 0; i < m; ++i) {
        if (std::abs(frequencies[i]) <= kFreqTol)
            throw std::invalid_argument("minimize_heating_cost: zero frequency in the family");
        for (size_t j = i + 1; j < m; ++j)
            if (std::abs(frequencies[i] - frequencies[j]) <= kFreqTol)
                throw std::invalid_argument("minimize_heating_cost: repeated frequencies");
    }
    if (m == 1)
        throw infeasible_target(
            "minimize_heating_cost: a single tone cannot satisfy the Fourier constraint", 0.0);

    MinimizerContext ctx;
    ctx.freqs = frequencies;
    ctx.gate_time = gate_time;
    ctx.phi_pair = phi_pair;

    // null space of sum_m A_m prod_{k != m} a_k = 0
    std::vector<double> f(m, 1.0);
    for (size_t i = 0; i < m; ++i)
        for (size_t k = 0; k < m; ++k)
            if (k != i) f[i] *= frequencies[k];
    size_t pivot = 0;
    for (size_t i = 1; i < m; ++i)
        if (std::abs(f[i]) > std::abs(f[pivot])) pivot = i;
    for (size_t i = 0; i < m; ++i) {
        if (i == pivot) continue;
        std::vector<double> v(m, 0.0);
        v[i] = 1.0;
        v[pivot] = -f[i] / f[pivot];
        ctx.null_basis.push_back(std::move(v));
    }

    const size_t dim = ctx.null_basis.size();
    std::vector<double> best_z;
    double best_c = 1e100;
    if (dim == 1) {
        best_z = {1.0};
        best_c = ctx.objective(best_z);
    } else {
        for (int seed = 0; seed < 8; ++seed) {
            std::mt19937 rng(static_cast<unsigned>(1234 + seed));
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            std::vector<double> z0(dim);
            for (double& v : z0) v = u(rng);
            const std::vector<double> z =
                nelder_mead([&](const std::vector<double>& q) { return ctx.objective(q); }, z0,
                            0.5, 600);
            const double c = ctx.objective(z);
            if (c < best_c - 1e-15) {
                best_c = c;
                best_z = z;
            }
        }
    }

    std::vector<double> amps = ctx.realize(best_z);
    if (amps.empty())
        throw infeasible_target("minimize_heating_cost: constraint set carries no phase", 0.0);
    // sign convention: first nonzero amplitude positive
    for (double a : amps) {
        if (a != 0.0) {
            if (a < 0.0)
                for (double& v : amps) v = -v;
            break;
        }
    }
    MinimizeResult res;
    res.amplitudes = amps;
    res.achieved_c = best_c;
    res.fourier_residual = fourier_constraint_residual(ctx.tones(amps));
    res.phase = 2.0 * entangling_phase(ctx.tones(amps), gate_time);
    return res;
}

} // namespace iongate
