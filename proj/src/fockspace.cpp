#include "iongate/fockspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace iongate {

// ---------------------------------- geometry ---------------------------------

RealVector chain_equilibrium(int n_ions) {
    if (n_ions < 1) throw std::invalid_argument("chain_equilibrium: n_ions must be >= 1");
    const int n = n_ions;
    RealVector u(n);
    // evenly spread seed; typical equilibrium spacing is O(1) in these units
    for (int i = 0; i < n; ++i) u(i) = (i - 0.5 * (n - 1)) * 1.3;
    if (n == 1) {
        u(0) = 0.0;
        return u;
    }
    // damped Newton on grad V, V = sum u_i^2/2 + sum_{i<j} 1/|u_i - u_j|
    for (int iter = 0; iter < 200; ++iter) {
        RealVector g(n);
        RealMatrix h = RealMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            g(i) = u(i);
            h(i, i) = 1.0;
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = u(i) - u(j);
                g(i) -= (d > 0 ? 1.0 : -1.0) / (d * d);
                const double c = 2.0 / std::abs(d * d * d);
                h(i, i) += c;
                h(i, j) -= c;
            }
        }
        RealVector step = h.ldlt().solve(g);
        double damp = 1.0;
        // keep the ordering intact while stepping
        for (int cut = 0; cut < 30; ++cut) {
            RealVector trial = u - damp * step;
            bool ordered = true;
            for (int i = 0; i + 1 < n; ++i)
                if (trial(i + 1) - trial(i) < 1e-6) ordered = false;
            if (ordered) {
                u = trial;
                break;
            }
            damp *= 0.5;
        }
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
    }
    return u;
}

NormalModes normal_modes(int n_ions) {
    if (n_ions < 1) throw std::invalid_argument("normal_modes: n_ions must be >= 1");
    const int n = n_ions;
    NormalModes out;
    if (n == 1) {
        out.ratios = RealVector::Ones(1);
        out.coeffs = RealMatrix::Ones(1, 1);
        return out;
    }
    const RealVector u = chain_equilibrium(n);
    RealMatrix a = RealMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 1.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d3 = std::abs(std::pow(u(i) - u(j), 3));
            diag += 2.0 / d3;
            a(i, j) = -2.0 / d3;
        }
        a(i, i) = diag;
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(a);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("normal_modes: Hessian eigensolve failed");
    out.ratios = solver.eigenvalues().cwiseSqrt();
    out.coeffs = solver.eigenvectors();
    // sign convention: first nonzero entry of each column positive
    for (int l = 0; l < n; ++l) {
        for (int j = 0; j < n; ++j) {
            if (std::abs(out.coeffs(j, l)) > 1e-12) {
                if (out.coeffs(j, l) < 0) out.coeffs.col(l) *= -1.0;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------- system -----------------------------------

SystemSpec SystemSpec::linear_chain(int n_ions, double coupling) {
    const NormalModes nm = normal_modes(n_ions);
    SystemSpec s;
    s.n_ions = n_ions;
    s.coupling = coupling;
    s.mode_ratios = nm.ratios;
    s.mode_coeffs = nm.coeffs;
    s.eta = nm.coeffs * coupling;
    s.validate();
    return s;
}

SystemSpec SystemSpec::from_eta(RealVector mode_ratios, RealMatrix eta, double coupling) {
    SystemSpec s;
    s.n_ions = static_cast<int>(eta.rows());
    s.coupling = coupling;
    s.mode_ratios = std::move(mode_ratios);
    s.eta = std::move(eta);
    s.mode_coeffs = s.eta / coupling;
    s.validate(false);
    return s;
}

void SystemSpec::validate(bool check_orthonormal) const {
    if (n_ions < 1) throw std::invalid_argument("SystemSpec: n_ions must be >= 1");
    if (coupling <= 0) throw std::invalid_argument("SystemSpec: coupling must be > 0");
    const int m = n_modes();
    if (eta.rows() != n_ions || eta.cols() != m)
        throw std::invalid_argument("SystemSpec: eta must be n_ions x n_modes");
    for (int l = 0; l < m; ++l) {
        if (mode_ratios(l) <= 0)
            throw std::invalid_argument("SystemSpec: mode ratios must be positive");
        if (l > 0 && mode_ratios(l) <= mode_ratios(l - 1))
            throw std::invalid_argument("SystemSpec: mode ratios must be strictly increasing");
    }
    if (check_orthonormal) {
        const RealMatrix gram = mode_coeffs.transpose() * mode_coeffs;
        if ((gram - RealMatrix::Identity(m, m)).lpNorm<Eigen::Infinity>() > 1e-12)
            throw std::invalid_argument("SystemSpec: mode coefficient columns not orthonormal");
    }
    if (eta.lpNorm<Eigen::Infinity>() > coupling * (1.0 + 1e-12))
        throw std::invalid_argument("SystemSpec: |eta| exceeds the coupling factor");
}

// ---------------------------------- space ------------------------------------

FockSpace::FockSpace(int n_spins_, std::vector<int> cutoffs_)
    : n_spins(n_spins_), cutoffs(std::move(cutoffs_)) {
    if (n_spins < 0) throw std::invalid_argument("FockSpace: negative spin count");
    strides_.assign(cutoffs.size(), 1);
    mot_dim_ = 1;
    for (int l = static_cast<int>(cutoffs.size()) - 1; l >= 0; --l) {
        if (cutoffs[static_cast<size_t>(l)] < 0)
            throw std::invalid_argument("FockSpace: negative cutoff");
        strides_[static_cast<size_t>(l)] = mot_dim_;
        mot_dim_ *= cutoffs[static_cast<size_t>(l)] + 1;
    }
}

int default_cutoff(int n_init, double coupling, int margin) {
    const int pad = std::max(margin, static_cast<int>(std::ceil(
                                         10.0 * coupling * std::sqrt(n_init + 1.0))));
    return n_init + pad;
}

// --------------------------------- operators ---------------------------------

bool Operator::is_hermitian(double tol) const {
    const Matrix d = dense();
    return (d - d.adjoint()).lpNorm<Eigen::Infinity>() <= tol;
}

bool Operator::is_unitary(double tol) const {
    const Matrix d = dense();
    return (d.adjoint() * d - Matrix::Identity(dim, dim)).lpNorm<Eigen::Infinity>() <= tol;
}

namespace {
// exact i^p
cplx ipow(int p) {
    switch (((p % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}
} // namespace

Matrix displacement_block(int order, double eta, int cutoff) {
    if (cutoff < std::abs(order))
        throw std::invalid_argument("displacement_block: cutoff smaller than |order|");
    if (order < 0) {
        const Matrix pos = displacement_block(-order, eta, cutoff);
        const double sign = (((-order) % 2) == 0) ? 1.0 : -1.0;
        return sign * pos.adjoint();
    }
    const int dim = cutoff + 1;
    Matrix out = Matrix::Zero(dim, dim);
    if (eta == 0.0) {
        if (order == 0) out.setIdentity();
        return out; // every term carries eta^{2n+k}
    }
    // ln-factorials for stable sqrt(m! (m+k)!) / (m-n)! ratios
    std::vector<double> lf(static_cast<size_t>(dim + order + 1), 0.0);
    for (size_t i = 1; i < lf.size(); ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
    const double sign_k = (eta < 0 && (order % 2)) ? -1.0 : 1.0;
    for (int m = 0; m + order <= cutoff; ++m) {
        cplx elem = 0.0;
        for (int n = 0; n <= m; ++n) {
            const double lnmag =
                (2 * n + order) * std::log(std::abs(eta)) +
                0.5 * (lf[static_cast<size_t>(m)] + lf[static_cast<size_t>(m + order)]) -
                lf[static_cast<size_t>(m - n)] - lf[static_cast<size_t>(n + order)] -
                lf[static_cast<size_t>(n)];
            const double mag = std::exp(lnmag);
            elem += ipow(2 * n + order) * mag * sign_k;
            if (n > 0 && mag < 1e-16 * std::abs(elem)) break;
        }
        out(m + order, m) = elem;
    }
    return out;
}

Matrix displacement_diagonal(double eta, int cutoff) {
    return displacement_block(0, eta, cutoff);
}

Matrix annihilation_block(int cutoff) {
    const int dim = cutoff + 1;
    Matrix a = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Matrix number_block(int cutoff) {
    const int dim = cutoff + 1;
    Matrix n = Matrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

Operator embed(const Matrix& block, Subsystem where, const FockSpace& space) {
    long sub_dim = 0;
    long stride = 0;
    if (where.kind == Subsystem::Kind::Spin) {
        if (where.index < 0 || where.index >= space.n_spins)
            throw std::invalid_argument("embed: spin index out of range");
        sub_dim = 2;
        stride = space.spin_bit(where.index) * space.motional_dim();
    } else {
        if (where.index < 0 || where.index >= space.n_modes())
            throw std::invalid_argument("embed: mode index out of range");
        sub_dim = space.cutoffs[static_cast<size_t>(where.index)] + 1;
        stride = space.mode_stride(where.index);
    }
    if (block.rows() != sub_dim || block.cols() != sub_dim)
        throw std::invalid_argument("embed: block dimension does not match the subsystem");

    const long dim = space.total_dim();
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(static_cast<size_t>(dim) * static_cast<size_t>(sub_dim));
    // every basis index decomposes as idx = hi*(sub_dim*stride) + s*stride + lo
    const long block_span = sub_dim * stride;
    for (long hi = 0; hi < dim / block_span; ++hi) {
        for (long s_out = 0; s_out < sub_dim; ++s_out) {
            for (long s_in = 0; s_in < sub_dim; ++s_in) {
                const cplx v = block(s_out, s_in);
                if (v == cplx(0.0)) continue;
                for (long lo = 0; lo < stride; ++lo) {
                    trips.emplace_back(hi * block_span + s_out * stride + lo,
                                       hi * block_span + s_in * stride + lo, v);
                }
            }
        }
    }
    SpMat m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    return Operator(dim, std::move(m));
}

Operator identity(const FockSpace& space) {
    const long dim = space.total_dim();
    SpMat m(dim, dim);
    m.setIdentity();
    return Operator(dim, std::move(m));
}

// --------------------------------- thermal -----------------------------------

ThermalWeights thermal_state(const std::vector<double>& nbar, const FockSpace& space,
                             double tail_tol) {
    if (nbar.size() != static_cast<size_t>(space.n_modes()))
        throw std::invalid_argument("thermal_state: one nbar per mode required");
    ThermalWeights w;
    for (int l = 0; l < space.n_modes(); ++l) {
        const double nb = nbar[static_cast<size_t>(l)];
        if (nb < 0) throw std::invalid_argument("thermal_state: nbar must be >= 0");
        const int cut = space.cutoffs[static_cast<size_t>(l)];
        RealVector p(cut + 1);
        double mass = 0.0;
        for (int n = 0; n <= cut; ++n) {
            p(n) = (nb == 0.0) ? (n == 0 ? 1.0 : 0.0)
                               : std::exp(n * std::log(nb) - (n + 1) * std::log1p(nb));
            mass += p(n);
        }
        const double tail = 1.0 - mass;
        if (tail > tail_tol)
            throw cutoff_too_small("thermal_state: truncated tail mass " +
                                   std::to_string(tail) + " above threshold");
        p /= mass;
        w.per_mode.push_back(std::move(p));
        w.captured.push_back(mass);
    }
    return w;
}

} // namespace iongate
