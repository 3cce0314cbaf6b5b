#include "iongate/magnus.hpp"

#include <cmath>

namespace iongate {

namespace {

Matrix comm(const Matrix& a, const Matrix& b) { return a * b - b * a; }

// one RK4 pass of the coupled generator equations
//   W1' = A,  W2' = -1/2 [W1, A],  W3' = -1/2 [W2, A] + 1/12 [W1, [W1, A]],
//   W4' = -1/2 [W3, A] + 1/12 ([W1, [W2, A]] + [W2, [W1, A]])
std::array<Matrix, 4> integrate_generators(const std::function<Matrix(double)>& a_of_t,
                                           double t_final, int order, int grid) {
    const Matrix a0 = a_of_t(0.0);
    const long dim = a0.rows();
    std::array<Matrix, 4> w;
    for (auto& m : w) m = Matrix::Zero(dim, dim);

    struct State {
        std::array<Matrix, 4> v;
    };
    const auto rhs = [&](const Matrix& a, const State& s, int ord) {
        State d;
        d.v[0] = a;
        if (ord >= 2) d.v[1] = -0.5 * comm(s.v[0], a);
        if (ord >= 3) d.v[2] = -0.5 * comm(s.v[1], a) + (1.0 / 12.0) * comm(s.v[0], comm(s.v[0], a));
        if (ord >= 4)
            d.v[3] = -0.5 * comm(s.v[2], a) +
                     (1.0 / 12.0) * (comm(s.v[0], comm(s.v[1], a)) + comm(s.v[1], comm(s.v[0], a)));
        for (int k = ord; k < 4; ++k) d.v[static_cast<size_t>(k)] = Matrix::Zero(dim, dim);
        return d;
    };

    State s;
    s.v = w;
    const double dt = t_final / grid;
    for (int step = 0; step < grid; ++step) {
        const double t = step * dt;
        const Matrix a1 = a_of_t(t);
        const Matrix a2 = a_of_t(t + 0.5 * dt);
        const Matrix a3 = a_of_t(t + dt);
        const State k1 = rhs(a1, s, order);
        State tmp;
        for (int i = 0; i < 4; ++i) tmp.v[i] = s.v[i] + 0.5 * dt * k1.v[i];
        const State k2 = rhs(a2, tmp, order);
        for (int i = 0; i < 4; ++i) tmp.v[i] = s.v[i] + 0.5 * dt * k2.v[i];
        const State k3 = rhs(a2, tmp, order);
        for (int i = 0; i < 4; ++i) tmp.v[i] = s.v[i] + dt * k3.v[i];
        const State k4 = rhs(a3, tmp, order);
        for (int i = 0; i < 4; ++i)
            s.v[i] += (dt / 6.0) * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
    }
    return s.v;
}

} // namespace

MagnusResult magnus_terms(const std::function<Matrix(double)>& h_of_t, double t_final,
                          int order, int grid, double tol) {
    if (order < 1 || order > 4) throw std::invalid_argument("magnus_terms: order must be 1..4");
    if (grid < 2) throw std::invalid_argument("magnus_terms: grid too coarse");
    const auto a_of_t = [&](double t) { return Matrix(-kI * h_of_t(t)); };
    const auto coarse = integrate_generators(a_of_t, t_final, order, grid);
    const auto fine = integrate_generators(a_of_t, t_final, order, 2 * grid);
    MagnusResult res;
    res.order = order;
    for (int i = 0; i < 4; ++i) {
        res.terms[static_cast<size_t>(i)] = fine[static_cast<size_t>(i)];
        const double diff =
            (fine[static_cast<size_t>(i)] - coarse[static_cast<size_t>(i)]).lpNorm<Eigen::Infinity>();
        res.quad_error[static_cast<size_t>(i)] = diff;
        if (diff > tol)
            throw precision_error("magnus_terms: grid-doubling changed term " +
                                      std::to_string(i + 1) + " beyond tolerance",
                                  coarse[static_cast<size_t>(i)].lpNorm<Eigen::Infinity>(),
                                  fine[static_cast<size_t>(i)].lpNorm<Eigen::Infinity>());
    }
    res.combined = res.terms[0];
    for (int i = 1; i < order; ++i) res.combined += res.terms[static_cast<size_t>(i)];
    return res;
}

Matrix dense_hamiltonian(const HamiltonianTerms& ht, double t) {
    const FockSpace& space = ht.space;
    const long mot = space.motional_dim();
    const long dim = space.total_dim();
    Matrix h = Matrix::Zero(dim, dim);
    const TermSnapshot snap = snapshot(ht, {{1.0, t}});
    for (const auto& e : snap.entries) {
        const BandOp& band = e.term->band;
        const long off = band.offset;
        const long bit = space.spin_bit(e.term->ion_slot);
        for (long b = 0; b < space.spin_dim(); ++b) {
            const bool up = (b & bit) != 0;
            const long bp = b ^ bit;
            const cplx ymat = up ? cplx(0, 1) : cplx(0, -1);
            const cplx wy = ymat * e.cy;
            const cplx wy_c = ymat * std::conj(e.cy);
            const cplx wx = e.cx;
            const cplx wx_c = std::conj(e.cx);
            for (long i = 0; i + off < mot; ++i) {
                // (cy M + cy* M^dag) carried into spin row bp, column b
                h(bp * mot + i + off, b * mot + i) += (wy + wx) * band.coef(i);
                h(bp * mot + i, b * mot + i + off) += (wy_c + wx_c) * std::conj(band.coef(i));
            }
        }
    }
    return h;
}

MagnusResult magnus_terms(const HamiltonianTerms& ht, int order, int grid, double tol) {
    return magnus_terms([&](double t) { return dense_hamiltonian(ht, t); }, ht.gate_time, order,
                        grid, tol);
}

// --- generator decomposition ----------------------------------------------------

namespace {

struct BasisElement {
    MonomialKey key;
    std::vector<int> shift;   // p - q per mode
    int flip_mask = 0;        // spin bits toggled
    std::array<cplx, 4> spin_phase{}; // phase per source spin index
    Vector coef;              // per source motional index; 0 where invalid
};

BasisElement make_element(const MonomialKey& key, const FockSpace& space) {
    BasisElement el;
    el.key = key;
    const int n_modes = space.n_modes();
    el.shift.resize(static_cast<size_t>(n_modes));
    for (int l = 0; l < n_modes; ++l)
        el.shift[static_cast<size_t>(l)] =
            key.p[static_cast<size_t>(l)] - key.q[static_cast<size_t>(l)];

    // spin part: (sy_1)^r (sy_2)^s, sy|0> = -i|1>, sy|1> = +i|0>
    el.flip_mask = (key.r ? static_cast<int>(space.spin_bit(0)) : 0) |
                   (key.s ? static_cast<int>(space.spin_bit(1)) : 0);
    for (long b = 0; b < 4; ++b) {
        cplx ph = 1.0;
        if (key.r) ph *= (b & space.spin_bit(0)) ? cplx(0, 1) : cplx(0, -1);
        if (key.s) ph *= (b & space.spin_bit(1)) ? cplx(0, 1) : cplx(0, -1);
        el.spin_phase[static_cast<size_t>(b)] = ph;
    }

    const long mot = space.motional_dim();
    el.coef = Vector::Zero(mot);
    for (long m = 0; m < mot; ++m) {
        double c = 1.0;
        bool valid = true;
        for (int l = 0; l < n_modes; ++l) {
            const int n = space.occupation(m, l);
            const int q = key.q[static_cast<size_t>(l)];
            const int p = key.p[static_cast<size_t>(l)];
            if (n < q || n - q + p > space.cutoffs[static_cast<size_t>(l)]) {
                valid = false;
                break;
            }
            // a^q then a^dag^p
            for (int k = 0; k < q; ++k) c *= std::sqrt(static_cast<double>(n - k));
            for (int k = 0; k < p; ++k) c *= std::sqrt(static_cast<double>(n - q + 1 + k));
        }
        el.coef(m) = valid ? c : 0.0;
    }
    return el;
}

} // namespace

Matrix monomial_operator(const MonomialKey& key, const FockSpace& space) {
    const BasisElement el = make_element(key, space);
    const long mot = space.motional_dim();
    const long dim = space.total_dim();
    long moff = 0;
    for (int l = 0; l < space.n_modes(); ++l)
        moff += el.shift[static_cast<size_t>(l)] * space.mode_stride(l);
    Matrix out = Matrix::Zero(dim, dim);
    for (long b = 0; b < space.spin_dim(); ++b) {
        const long bp = b ^ el.flip_mask;
        for (long m = 0; m < mot; ++m) {
            if (el.coef(m) == cplx(0.0)) continue;
            out(bp * mot + m + moff, b * mot + m) +=
                el.spin_phase[static_cast<size_t>(b)] * el.coef(m);
        }
    }
    return out;
}

GeneratorDecomposition decompose_generator(const Matrix& gen, const FockSpace& space,
                                           int max_power) {
    if (space.n_spins != 2)
        throw std::invalid_argument("decompose_generator: pair spin space expected");
    if (gen.rows() != space.total_dim())
        throw std::invalid_argument("decompose_generator: dimension mismatch");
    const int n_modes = space.n_modes();
    for (int l = 0; l < n_modes; ++l)
        if (space.cutoffs[static_cast<size_t>(l)] < max_power)
            throw std::invalid_argument(
                "decompose_generator: cutoff too small for the requested max power");

    // enumerate keys: per mode (p, q) with p + q <= max_power, spin powers in {0,1}
    std::vector<std::pair<int, int>> pq;
    for (int p = 0; p <= max_power; ++p)
        for (int q = 0; p + q <= max_power; ++q) pq.emplace_back(p, q);

    std::vector<MonomialKey> keys;
    std::vector<size_t> idx(static_cast<size_t>(n_modes), 0);
    while (true) {
        MonomialKey key;
        key.p.resize(static_cast<size_t>(n_modes));
        key.q.resize(static_cast<size_t>(n_modes));
        for (int l = 0; l < n_modes; ++l) {
            key.p[static_cast<size_t>(l)] = pq[idx[static_cast<size_t>(l)]].first;
            key.q[static_cast<size_t>(l)] = pq[idx[static_cast<size_t>(l)]].second;
        }
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s) {
                key.r = r;
                key.s = s;
                keys.push_back(key);
            }
        int l = 0;
        for (; l < n_modes; ++l) {
            if (++idx[static_cast<size_t>(l)] < pq.size()) break;
            idx[static_cast<size_t>(l)] = 0;
        }
        if (l == n_modes) break;
    }

    // group by (shift vector, spin mask): Gram blocks are diagonal across groups
    std::map<std::pair<std::vector<int>, int>, std::vector<BasisElement>> groups;
    for (const MonomialKey& key : keys) {
        BasisElement el = make_element(key, space);
        auto gkey = std::make_pair(el.shift, el.flip_mask);
        groups[std::move(gkey)].push_back(std::move(el));
    }

    const long mot = space.motional_dim();
    GeneratorDecomposition out;
    out.space = space;
    Matrix recon = Matrix::Zero(gen.rows(), gen.cols());
    for (auto& [gkey, els] : groups) {
        long moff = 0;
        for (int l = 0; l < n_modes; ++l)
            moff += gkey.first[static_cast<size_t>(l)] * space.mode_stride(l);
        const int flip = gkey.second;
        const size_t nb = els.size();
        // inner products over the nonzero pattern (spin b, motional m)
        Matrix gram(nb, nb);
        Vector proj(nb);
        for (size_t i = 0; i < nb; ++i) {
            for (size_t j = 0; j < nb; ++j) {
                cplx g = 0.0;
                for (long b = 0; b < 4; ++b) {
                    const cplx sp = std::conj(els[i].spin_phase[static_cast<size_t>(b)]) *
                                    els[j].spin_phase[static_cast<size_t>(b)];
                    cplx dotv = 0.0;
                    for (long m = 0; m < mot; ++m)
                        dotv += std::conj(els[i].coef(m)) * els[j].coef(m);
                    g += sp * dotv;
                }
                gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g;
            }
            cplx pr = 0.0;
            for (long b = 0; b < 4; ++b) {
                const long bp = b ^ flip;
                for (long m = 0; m < mot; ++m) {
                    if (els[i].coef(m) == cplx(0.0)) continue;
                    pr += std::conj(els[i].spin_phase[static_cast<size_t>(b)] * els[i].coef(m)) *
                          gen(bp * mot + m + moff, b * mot + m);
                }
            }
            proj(static_cast<Eigen::Index>(i)) = pr;
        }
        Eigen::LDLT<Matrix> ldlt(gram);
        const double dmax = std::max(1.0, ldlt.vectorD().real().maxCoeff());
        if (ldlt.info() != Eigen::Success ||
            (ldlt.vectorD().real().array() < 1e-12 * dmax).any())
            throw std::invalid_argument(
                "decompose_generator: rank-deficient Gram block; enlarge the cutoff");
        const Vector g = ldlt.solve(proj);
        for (size_t i = 0; i < nb; ++i) {
            out.coeffs[els[i].key] = g(static_cast<Eigen::Index>(i));
            for (long b = 0; b < 4; ++b) {
                const long bp = b ^ flip;
                for (long m = 0; m < mot; ++m) {
                    if (els[i].coef(m) == cplx(0.0)) continue;
                    recon(bp * mot + m + moff, b * mot + m) +=
                        g(static_cast<Eigen::Index>(i)) *
                        els[i].spin_phase[static_cast<size_t>(b)] * els[i].coef(m);
                }
            }
        }
    }
    out.residual = (gen - recon).norm();
    return out;
}

Matrix GeneratorDecomposition::reconstruct() const {
    Matrix out = Matrix::Zero(space.total_dim(), space.total_dim());
    for (const auto& [key, g] : coeffs) out += g * monomial_operator(key, space);
    return out;
}

} // namespace iongate
