#include "iongate/propagate.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace iongate {

namespace {

constexpr double kGaussShift = 0.28867513459481287;  // sqrt(3)/6
constexpr double kCf4Small = -0.038675134594812866;  // (3 - 2 sqrt(3)) / 12
constexpr double kCf4Large = 0.53867513459481287;    // (3 + 2 sqrt(3)) / 12

// v <- exp(theta * A) v with A given as an accumulate-apply closure
template <typename Apply>
void exp_apply(const Apply& apply, cplx theta, Vector& v, Vector& term, Vector& tmp) {
    term = v;
    for (int k = 1; k <= 64; ++k) {
        tmp.setZero();
        apply(term, tmp);
        term = (theta / static_cast<double>(k)) * tmp;
        v += term;
        if (term.template lpNorm<Eigen::Infinity>() <=
            1e-17 * std::max(1.0, v.template lpNorm<Eigen::Infinity>()))
            break;
    }
}

template <typename Apply>
void exp_apply_matrix(const Apply& apply, cplx theta, Matrix& m, Vector& term, Vector& tmp) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Vector col = m.col(c);
        exp_apply(apply, theta, col, term, tmp);
        m.col(c) = col;
    }
}

void check_leakage_vector(const FockSpace& space, const Vector& v, bool motional_only,
                          double tol) {
    const long mot = space.motional_dim();
    for (int l = 0; l < space.n_modes(); ++l) {
        const int cut = space.cutoffs[static_cast<size_t>(l)];
        if (cut < 2) continue;
        double pop = 0.0;
        for (long i = 0; i < v.size(); ++i) {
            const long m = motional_only ? i : (i % mot);
            if (space.occupation(m, l) >= cut - 1) pop += std::norm(v(i));
        }
        if (pop > tol)
            throw cutoff_too_small("propagate: population " + std::to_string(pop) +
                                   " in the top two levels of mode " + std::to_string(l + 1));
    }
}

template <typename Stepper>
void run_steps(const HamiltonianTerms& ht, const PropagationOptions& opts,
               const Stepper& step_fn, const std::function<void(int)>& on_sample) {
    if (opts.steps < 1) throw std::invalid_argument("propagate: steps must be >= 1");
    const double dt = ht.gate_time / opts.steps;
    for (int s = 0; s < opts.steps; ++s) {
        step_fn(s * dt, dt);
        if (on_sample && (s % opts.leakage_interval == opts.leakage_interval - 1 ||
                          s == opts.steps - 1))
            on_sample(s);
    }
}

// snapshots for one step of the chosen integrator; each entry is (theta-style weight list)
std::vector<TermSnapshot> step_snapshots(const HamiltonianTerms& ht, Integrator integ,
                                         double t, double dt) {
    std::vector<TermSnapshot> snaps;
    if (integ == Integrator::ExponentialMidpoint) {
        snaps.push_back(snapshot(ht, {{1.0, t + 0.5 * dt}}));
    } else {
        const double t1 = t + (0.5 - kGaussShift) * dt;
        const double t2 = t + (0.5 + kGaussShift) * dt;
        // right factor acts first and weights the earlier node more
        snaps.push_back(snapshot(ht, {{kCf4Large, t1}, {kCf4Small, t2}}));
        snaps.push_back(snapshot(ht, {{kCf4Small, t1}, {kCf4Large, t2}}));
    }
    return snaps;
}

} // namespace

Vector sigma_y_eigvec(double sign) {
    Vector v(2);
    // sy = [[0, i], [-i, 0]]: eigenvector (i*s, 1)/sqrt(2) for eigenvalue s
    v << cplx(0.0, sign / std::sqrt(2.0)), cplx(1.0 / std::sqrt(2.0), 0.0);
    return v;
}

Matrix pair_y_basis() {
    Matrix v(4, 4);
    for (int b = 0; b < 4; ++b) {
        const auto s = pair_signs(b);
        const Vector v1 = sigma_y_eigvec(s[0]);
        const Vector v2 = sigma_y_eigvec(s[1]);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) v(i * 2 + j, b) = v1(i) * v2(j);
    }
    return v;
}

// --- unitary ----------------------------------------------------------------------

void propagate_states(const HamiltonianTerms& ht, const PropagationOptions& opts,
                      std::vector<Vector>& states) {
    const long dim = ht.space.total_dim();
    for (const Vector& v : states)
        if (v.size() != dim) throw std::invalid_argument("propagate_states: dimension mismatch");
    Vector term(dim), tmp(dim);
    run_steps(
        ht, opts,
        [&](double t, double dt) {
            for (const TermSnapshot& snap : step_snapshots(ht, opts.integrator, t, dt))
                for (Vector& v : states)
                    exp_apply([&](const Vector& x, Vector& y) { snap.apply_full(x, y); },
                              cplx(0.0, -dt), v, term, tmp);
        },
        [&](int) {
            if (!opts.leakage_check) return;
            for (const Vector& v : states)
                check_leakage_vector(ht.space, v, false, opts.leakage_tol);
        });
}

Matrix propagate_unitary(const HamiltonianTerms& ht, const PropagationOptions& opts) {
    const long dim = ht.space.total_dim();
    Matrix u = Matrix::Identity(dim, dim);
    Vector term(dim), tmp(dim);
    run_steps(
        ht, opts,
        [&](double t, double dt) {
            for (const TermSnapshot& snap : step_snapshots(ht, opts.integrator, t, dt))
                exp_apply_matrix([&](const Vector& x, Vector& y) { snap.apply_full(x, y); },
                                 cplx(0.0, -dt), u, term, tmp);
        },
        nullptr);
    return u;
}

void propagate_block_states(const HamiltonianTerms& ht, const std::array<double, 2>& signs,
                            const PropagationOptions& opts, std::vector<Vector>& states) {
    if (!ht.spin_diagonal())
        throw std::invalid_argument("propagate_block_states: spin-frequency shift breaks the "
                                    "sigma-y block structure");
    const long dim = ht.space.motional_dim();
    for (const Vector& v : states)
        if (v.size() != dim)
            throw std::invalid_argument("propagate_block_states: dimension mismatch");
    Vector term(dim), tmp(dim);
    run_steps(
        ht, opts,
        [&](double t, double dt) {
            for (const TermSnapshot& snap : step_snapshots(ht, opts.integrator, t, dt))
                for (Vector& v : states)
                    exp_apply([&](const Vector& x, Vector& y) { snap.apply_block(signs, x, y); },
                              cplx(0.0, -dt), v, term, tmp);
        },
        [&](int) {
            if (!opts.leakage_check) return;
            for (const Vector& v : states)
                check_leakage_vector(ht.space, v, true, opts.leakage_tol);
        });
}

Matrix propagate_block_unitary(const HamiltonianTerms& ht, const std::array<double, 2>& signs,
                               const PropagationOptions& opts) {
    const long dim = ht.space.motional_dim();
    Matrix u = Matrix::Identity(dim, dim);
    Vector term(dim), tmp(dim);
    run_steps(
        ht, opts,
        [&](double t, double dt) {
            for (const TermSnapshot& snap : step_snapshots(ht, opts.integrator, t, dt))
                exp_apply_matrix([&](const Vector& x, Vector& y) { snap.apply_block(signs, x, y); },
                                 cplx(0.0, -dt), u, term, tmp);
        },
        nullptr);
    return u;
}

// --- Lindblad ---------------------------------------------------------------------

namespace {

struct JumpContext {
    const FockSpace* space;
    const NoiseSpec* noise;
    bool motional_only;
    std::vector<std::vector<double>> occ; // per mode, per (relevant) index
    std::vector<long> stride;

    JumpContext(const FockSpace& sp, const NoiseSpec& ns, bool mot_only)
        : space(&sp), noise(&ns), motional_only(mot_only) {
        const long dim = mot_only ? sp.motional_dim() : sp.total_dim();
        const long mot = sp.motional_dim();
        occ.resize(static_cast<size_t>(sp.n_modes()));
        stride.resize(static_cast<size_t>(sp.n_modes()));
        for (int l = 0; l < sp.n_modes(); ++l) {
            stride[static_cast<size_t>(l)] = sp.mode_stride(l);
            auto& o = occ[static_cast<size_t>(l)];
            o.resize(static_cast<size_t>(dim));
            for (long i = 0; i < dim; ++i)
                o[static_cast<size_t>(i)] = sp.occupation(mot_only ? i : (i % mot), l);
        }
    }

    // out += dissipator(r)
    void add_dissipator(const Matrix& r, Matrix& out) const {
        const long dim = r.rows();
        for (int l = 0; l < space->n_modes(); ++l) {
            const double gm = noise->gamma_minus[static_cast<size_t>(l)];
            const double gp = noise->gamma_plus[static_cast<size_t>(l)];
            const double gn = noise->gamma_dephase[static_cast<size_t>(l)];
            if (gm == 0.0 && gp == 0.0 && gn == 0.0) continue;
            const auto& o = occ[static_cast<size_t>(l)];
            const long s = stride[static_cast<size_t>(l)];
            const int cut = space->cutoffs[static_cast<size_t>(l)];
            for (long j = 0; j < dim; ++j) {
                const double oj = o[static_cast<size_t>(j)];
                for (long i = 0; i < dim; ++i) {
                    const double oi = o[static_cast<size_t>(i)];
                    cplx acc = 0.0;
                    if (gm != 0.0) {
                        if (oi + 1 <= cut && oj + 1 <= cut)
                            acc += gm * std::sqrt((oi + 1.0) * (oj + 1.0)) * r(i + s, j + s);
                        acc -= 0.5 * gm * (oi + oj) * r(i, j);
                    }
                    if (gp != 0.0) {
                        if (oi >= 1 && oj >= 1)
                            acc += gp * std::sqrt(oi * oj) * r(i - s, j - s);
                        acc -= 0.5 * gp * (oi + oj + 2.0) * r(i, j);
                    }
                    if (gn != 0.0)
                        acc += gn * (oi * oj - 0.5 * (oi * oi + oj * oj)) * r(i, j);
                    out(i, j) += acc;
                }
            }
        }
    }
};

void validate_density(const Matrix& rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("lindblad: rho must be square");
    if (std::abs(rho.trace() - cplx(1.0)) > 1e-8)
        throw std::invalid_argument("lindblad: rho must have unit trace");
    if ((rho - rho.adjoint()).lpNorm<Eigen::Infinity>() > 1e-8)
        throw std::invalid_argument("lindblad: rho must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-7)
        throw std::invalid_argument("lindblad: rho must be positive semidefinite");
}

} // namespace

Matrix propagate_lindblad(const HamiltonianTerms& ht, const NoiseSpec& noise, const Matrix& rho0,
                          const PropagationOptions& opts) {
    noise.validate(ht.space.n_modes());
    validate_density(rho0);
    const long dim = ht.space.total_dim();
    if (rho0.rows() != dim) throw std::invalid_argument("lindblad: dimension mismatch");
    const JumpContext jumps(ht.space, noise, false);

    Matrix rho = rho0;
    Matrix k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), work(dim, dim),
        scratch(dim, dim);
    const auto rhs = [&](double t, const Matrix& r, Matrix& out) {
        out.setZero();
        const TermSnapshot snap = snapshot(ht, {{1.0, t}});
        Vector col(dim), acc(dim);
        // -i(H r - r H), with r H = (H r^dag)^dag for Hermitian-step consistency
        for (long c = 0; c < dim; ++c) {
            acc.setZero();
            col = r.col(c);
            snap.apply_full(col, acc);
            out.col(c) -= kI * acc;
        }
        scratch = r.adjoint();
        for (long c = 0; c < dim; ++c) {
            acc.setZero();
            col = scratch.col(c);
            snap.apply_full(col, acc);
            scratch.col(c) = acc;
        }
        out += kI * scratch.adjoint();
        jumps.add_dissipator(r, out);
    };

    const double dt = ht.gate_time / opts.steps;
    for (int s = 0; s < opts.steps; ++s) {
        const double t = s * dt;
        rhs(t, rho, k1);
        work = rho + 0.5 * dt * k1;
        rhs(t + 0.5 * dt, work, k2);
        work = rho + 0.5 * dt * k2;
        rhs(t + 0.5 * dt, work, k3);
        work = rho + dt * k3;
        rhs(t + dt, work, k4);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return rho;
}

Matrix propagate_lindblad_block(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                const std::array<double, 2>& signs_left,
                                const std::array<double, 2>& signs_right, const Matrix& r0,
                                const PropagationOptions& opts) {
    if (!ht.spin_diagonal())
        throw std::invalid_argument("propagate_lindblad_block: requires eps_omega = 0");
    noise.validate(ht.space.n_modes());
    const long dim = ht.space.motional_dim();
    if (r0.rows() != dim || r0.cols() != dim)
        throw std::invalid_argument("propagate_lindblad_block: dimension mismatch");
    const JumpContext jumps(ht.space, noise, true);

    Matrix rho = r0;
    Matrix k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), work(dim, dim),
        scratch(dim, dim);
    const auto rhs = [&](double t, const Matrix& r, Matrix& out) {
        out.setZero();
        const TermSnapshot snap = snapshot(ht, {{1.0, t}});
        Vector col(dim), acc(dim);
        for (long c = 0; c < dim; ++c) {
            acc.setZero();
            col = r.col(c);
            snap.apply_block(signs_left, col, acc);
            out.col(c) -= kI * acc;
        }
        scratch = r.adjoint();
        for (long c = 0; c < dim; ++c) {
            acc.setZero();
            col = scratch.col(c);
            snap.apply_block(signs_right, col, acc);
            scratch.col(c) = acc;
        }
        out += kI * scratch.adjoint();
        jumps.add_dissipator(r, out);
    };

    const double dt = ht.gate_time / opts.steps;
    for (int s = 0; s < opts.steps; ++s) {
        const double t = s * dt;
        rhs(t, rho, k1);
        work = rho + 0.5 * dt * k1;
        rhs(t + 0.5 * dt, work, k2);
        work = rho + 0.5 * dt * k2;
        rhs(t + 0.5 * dt, work, k3);
        work = rho + dt * k3;
        rhs(t + dt, work, k4);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return rho;
}

// --- perturbative dissipation -------------------------------------------------------

DyadMap perturbative_dissipation_map(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                     const std::vector<int>& rho_m_fock,
                                     const PropagationOptions& opts) {
    if (!ht.spin_diagonal())
        throw std::invalid_argument("perturbative_dissipation: requires eps_omega = 0");
    noise.validate(ht.space.n_modes());
    const long dim = ht.space.motional_dim();
    if (rho_m_fock.size() != static_cast<size_t>(ht.space.n_modes()))
        throw std::invalid_argument("perturbative_dissipation: one occupation per mode");
    long n_idx = 0;
    for (int l = 0; l < ht.space.n_modes(); ++l) {
        if (rho_m_fock[static_cast<size_t>(l)] < 0 ||
            rho_m_fock[static_cast<size_t>(l)] > ht.space.cutoffs[static_cast<size_t>(l)])
            throw std::invalid_argument("perturbative_dissipation: occupation outside cutoff");
        n_idx += rho_m_fock[static_cast<size_t>(l)] * ht.space.mode_stride(l);
    }
    // four dense block propagators, stepped together; quadrature on the step grid
    std::array<Matrix, 4> u;
    for (int b = 0; b < 4; ++b) u[static_cast<size_t>(b)] = Matrix::Identity(dim, dim);
    Matrix tau = Matrix::Zero(4, 4);
    Vector term(dim), tmp(dim);

    const double dt = ht.gate_time / opts.steps;
    int node_every = std::max(1, opts.steps / 256);
    while (opts.steps % node_every != 0) --node_every;

    const int n_modes = ht.space.n_modes();
    const auto channel_apply = [&](int l, int c, bool square, const Vector& x, Vector& y) {
        const long s = ht.space.mode_stride(l);
        const int cut = ht.space.cutoffs[static_cast<size_t>(l)];
        y.setZero();
        for (long i = 0; i < dim; ++i) {
            const int n = ht.space.occupation(i, l);
            if (c == 0) { // C = a, C^dag C = n
                if (!square && n >= 1) y(i - s) += std::sqrt(double(n)) * x(i);
                if (square) y(i) += double(n) * x(i);
            } else if (c == 1) { // C = a^dag, C^dag C = n + 1
                if (!square && n + 1 <= cut) y(i + s) += std::sqrt(n + 1.0) * x(i);
                if (square) y(i) += (n + 1.0) * x(i);
            } else { // C = n, C^dag C = n^2
                if (!square) y(i) += double(n) * x(i);
                if (square) y(i) += double(n) * double(n) * x(i);
            }
        }
    };

    const auto accumulate = [&](double weight) {
        Vector x(dim);
        // rotated channel vectors per block: phi = U^dag C psi, chi_n = (U^dag C^dag C psi)(n)
        std::vector<std::array<Vector, 4>> phi(static_cast<size_t>(n_modes * 3));
        std::vector<std::array<cplx, 4>> chi_n(static_cast<size_t>(n_modes * 3));
        for (int b = 0; b < 4; ++b) {
            const auto psi = u[static_cast<size_t>(b)].col(n_idx);
            for (int l = 0; l < n_modes; ++l) {
                const double rates[3] = {noise.gamma_minus[static_cast<size_t>(l)],
                                         noise.gamma_plus[static_cast<size_t>(l)],
                                         noise.gamma_dephase[static_cast<size_t>(l)]};
                for (int c = 0; c < 3; ++c) {
                    const size_t ch = static_cast<size_t>(l * 3 + c);
                    if (rates[c] == 0.0) continue;
                    channel_apply(l, c, false, psi, x);
                    phi[ch][static_cast<size_t>(b)] = u[static_cast<size_t>(b)].adjoint() * x;
                    channel_apply(l, c, true, psi, x);
                    // (U^dag x)(n_idx) = <col n_idx of U, x>
                    chi_n[ch][static_cast<size_t>(b)] =
                        u[static_cast<size_t>(b)].col(n_idx).dot(x);
                }
            }
        }
        for (int bl = 0; bl < 4; ++bl) {
            for (int br = 0; br < 4; ++br) {
                cplx acc = 0.0;
                for (int l = 0; l < n_modes; ++l) {
                    const double rates[3] = {noise.gamma_minus[static_cast<size_t>(l)],
                                             noise.gamma_plus[static_cast<size_t>(l)],
                                             noise.gamma_dephase[static_cast<size_t>(l)]};
                    for (int c = 0; c < 3; ++c) {
                        if (rates[c] == 0.0) continue;
                        const size_t ch = static_cast<size_t>(l * 3 + c);
                        acc += rates[c] * (phi[ch][static_cast<size_t>(br)].dot(
                                              phi[ch][static_cast<size_t>(bl)]) -
                                           0.5 * chi_n[ch][static_cast<size_t>(bl)] -
                                           0.5 * std::conj(chi_n[ch][static_cast<size_t>(br)]));
                    }
                }
                tau(bl, br) += weight * acc;
            }
        }
    };

    accumulate(0.5 * dt * node_every); // t = 0 endpoint
    for (int s = 0; s < opts.steps; ++s) {
        const double t = s * dt;
        for (const TermSnapshot& snap : step_snapshots(ht, opts.integrator, t, dt))
            for (int b = 0; b < 4; ++b)
                exp_apply_matrix(
                    [&](const Vector& x, Vector& y) { snap.apply_block(pair_signs(b), x, y); },
                    cplx(0.0, -dt), u[static_cast<size_t>(b)], term, tmp);
        if ((s + 1) % node_every == 0)
            accumulate((s + 1 == opts.steps) ? 0.5 * dt * node_every : dt * node_every);
    }

    // assemble the dyad map: [Delta rho]_y = tau (hadamard) [dyad]_y
    const Matrix v = pair_y_basis();
    DyadMap map;
    map.d = 4;
    map.out.resize(16);
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            Matrix dyad = Matrix::Zero(4, 4);
            dyad(a, b) = 1.0;
            const Matrix y = v.adjoint() * dyad * v;
            map(a, b) = v * y.cwiseProduct(tau) * v.adjoint();
        }
    }
    return map;
}

Matrix perturbative_dissipation(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                const Matrix& rho_s, const std::vector<int>& rho_m_fock,
                                const PropagationOptions& opts) {
    if (rho_s.rows() != 4 || rho_s.cols() != 4)
        throw std::invalid_argument("perturbative_dissipation: rho_s must act on the pair");
    const DyadMap map = perturbative_dissipation_map(ht, noise, rho_m_fock, opts);
    Matrix out = Matrix::Zero(4, 4);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) out += rho_s(a, b) * map(a, b);
    return out;
}

// --- reference gate -----------------------------------------------------------------

Matrix ms_reference_unitary(double phi, int n_ions, bool all_pairs) {
    const int n = all_pairs ? n_ions : 2;
    const long dim = 1L << n;
    Matrix gen = Matrix::Zero(dim, dim);
    const Matrix sy = sigma_y2();
    const Matrix id2 = Matrix::Identity(2, 2);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            if (j == k) continue;
            Matrix term = Matrix::Ones(1, 1);
            for (int q = 0; q < n; ++q) term = kron(term, (q == j || q == k) ? sy : id2);
            gen += term;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(gen);
    const Matrix vecs = es.eigenvectors();
    Vector ph(dim);
    for (long i = 0; i < dim; ++i) ph(i) = std::exp(kI * phi * es.eigenvalues()(i));
    return vecs * ph.asDiagonal() * vecs.adjoint();
}

long fock_index(const FockSpace& space, long spin, const std::vector<int>& n) {
    long idx = spin * space.motional_dim();
    for (int l = 0; l < space.n_modes(); ++l)
        idx += n[static_cast<size_t>(l)] * space.mode_stride(l);
    return idx;
}

} // namespace iongate
