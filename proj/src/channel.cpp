#include "iongate/channel.hpp"

#include <cmath>

namespace iongate {

SpinChannel SpinChannel::zero(int d) {
    SpinChannel ch;
    ch.d = d;
    ch.dyad_out.assign(static_cast<size_t>(d * d), Matrix::Zero(d, d));
    return ch;
}

SpinChannel SpinChannel::identity_channel(int d) {
    SpinChannel ch = zero(d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) ch.at(a, b)(a, b) = 1.0;
    return ch;
}

SpinChannel& SpinChannel::operator+=(const SpinChannel& other) {
    for (size_t i = 0; i < dyad_out.size(); ++i) dyad_out[i] += other.dyad_out[i];
    return *this;
}

SpinChannel& SpinChannel::operator*=(double w) {
    for (auto& m : dyad_out) m *= w;
    return *this;
}

SpinChannel channel_from_tau(const Matrix& tau) {
    const Matrix v = pair_y_basis();
    SpinChannel ch = SpinChannel::zero(4);
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            Matrix dyad = Matrix::Zero(4, 4);
            dyad(a, b) = 1.0;
            const Matrix y = v.adjoint() * dyad * v;
            ch.at(a, b) = v * y.cwiseProduct(tau) * v.adjoint();
        }
    }
    return ch;
}

double leakage_of(const FockSpace& space, const std::vector<Vector>& states, bool motional_only) {
    double worst = 0.0;
    const long mot = space.motional_dim();
    for (int l = 0; l < space.n_modes(); ++l) {
        const int cut = space.cutoffs[static_cast<size_t>(l)];
        if (cut < 2) continue;
        for (const Vector& v : states) {
            double pop = 0.0;
            for (long i = 0; i < v.size(); ++i) {
                const long m = motional_only ? i : (i % mot);
                if (space.occupation(m, l) >= cut - 1) pop += std::norm(v(i));
            }
            worst = std::max(worst, pop);
        }
    }
    return worst;
}

Matrix unitary_tau(const HamiltonianTerms& ht, const std::vector<int>& fock_n,
                   const PropagationOptions& opts, double* leakage_out) {
    const long n_idx = fock_index(ht.space, 0, fock_n) ;
    std::vector<Vector> states;
    for (int b = 0; b < 4; ++b) {
        Vector v = Vector::Zero(ht.space.motional_dim());
        v(n_idx) = 1.0;
        states.push_back(std::move(v));
    }
    for (int b = 0; b < 4; ++b) {
        std::vector<Vector> one{std::move(states[static_cast<size_t>(b)])};
        propagate_block_states(ht, pair_signs(b), opts, one);
        states[static_cast<size_t>(b)] = std::move(one[0]);
    }
    if (leakage_out) *leakage_out = leakage_of(ht.space, states, true);
    Matrix tau(4, 4);
    for (int s = 0; s < 4; ++s)
        for (int sp = 0; sp < 4; ++sp)
            tau(s, sp) = states[static_cast<size_t>(sp)].dot(states[static_cast<size_t>(s)]);
    return tau;
}

SpinChannel unitary_channel_full(const HamiltonianTerms& ht, const std::vector<int>& fock_n,
                                 const PropagationOptions& opts, double* leakage_out) {
    const long mot = ht.space.motional_dim();
    std::vector<Vector> states;
    for (long a = 0; a < 4; ++a) {
        Vector v = Vector::Zero(ht.space.total_dim());
        v(fock_index(ht.space, a, fock_n)) = 1.0;
        states.push_back(std::move(v));
    }
    propagate_states(ht, opts, states);
    if (leakage_out) *leakage_out = leakage_of(ht.space, states, false);
    SpinChannel ch = SpinChannel::zero(4);
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            Matrix& e = ch.at(a, b);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    e(i, j) = states[static_cast<size_t>(b)]
                                  .segment(j * mot, mot)
                                  .dot(states[static_cast<size_t>(a)].segment(i * mot, mot));
        }
    }
    return ch;
}

Matrix lindblad_tau(const HamiltonianTerms& ht, const NoiseSpec& noise,
                    const std::vector<int>& fock_n, const PropagationOptions& opts,
                    double* leakage_out) {
    const long dim = ht.space.motional_dim();
    const long n_idx = fock_index(ht.space, 0, fock_n);
    Matrix r0 = Matrix::Zero(dim, dim);
    r0(n_idx, n_idx) = 1.0;
    Matrix tau(4, 4);
    for (int bl = 0; bl < 4; ++bl) {
        for (int br = bl; br < 4; ++br) {
            const Matrix r =
                propagate_lindblad_block(ht, noise, pair_signs(bl), pair_signs(br), r0, opts);
            tau(bl, br) = r.trace();
            if (br != bl) tau(br, bl) = std::conj(tau(bl, br)); // R_{s's} = R_{ss'}^dag
            if (leakage_out && bl == br) {
                for (int l = 0; l < ht.space.n_modes(); ++l) {
                    const int cut = ht.space.cutoffs[static_cast<size_t>(l)];
                    if (cut < 2) continue;
                    double pop = 0.0;
                    for (long i = 0; i < dim; ++i)
                        if (ht.space.occupation(i, l) >= cut - 1) pop += std::real(r(i, i));
                    *leakage_out = std::max(*leakage_out, pop);
                }
            }
        }
    }
    return tau;
}

SpinChannel lindblad_channel_full(const HamiltonianTerms& ht, const NoiseSpec& noise,
                                  const std::vector<int>& fock_n,
                                  const PropagationOptions& opts, double* leakage_out) {
    const long dim = ht.space.total_dim();
    const long mot = ht.space.motional_dim();
    SpinChannel ch = SpinChannel::zero(4);
    // Hermitian combinations keep the integrator inputs physical; dyads follow by linearity
    std::vector<Matrix> evolved(16);
    const auto evolve_pure = [&](const Vector& v) {
        const Matrix rho0 = v * v.adjoint();
        Matrix r = propagate_lindblad(ht, noise, rho0, opts);
        if (leakage_out) {
            for (int l = 0; l < ht.space.n_modes(); ++l) {
                const int cut = ht.space.cutoffs[static_cast<size_t>(l)];
                if (cut < 2) continue;
                double pop = 0.0;
                for (long i = 0; i < dim; ++i)
                    if (ht.space.occupation(i % mot, l) >= cut - 1) pop += std::real(r(i, i));
                *leakage_out = std::max(*leakage_out, pop);
            }
        }
        return r;
    };
    std::vector<Matrix> diag(4);
    for (long a = 0; a < 4; ++a) {
        Vector v = Vector::Zero(dim);
        v(fock_index(ht.space, a, fock_n)) = 1.0;
        diag[static_cast<size_t>(a)] = evolve_pure(v);
    }
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            Matrix out;
            if (a == b) {
                out = diag[static_cast<size_t>(a)];
            } else {
                Vector va = Vector::Zero(dim), vb = Vector::Zero(dim);
                va(fock_index(ht.space, a, fock_n)) = 1.0;
                vb(fock_index(ht.space, b, fock_n)) = 1.0;
                const Vector plus = (va + vb) / std::sqrt(2.0);
                const Vector plus_i = (va + kI * vb) / std::sqrt(2.0);
                const Matrix rp = evolve_pure(plus);
                const Matrix ri = evolve_pure(plus_i);
                // |a><b| = (1+i)/2 (P+ - (D_a+D_b)/2) ... polarization identity
                out = rp + kI * ri -
                      0.5 * (cplx(1.0, 1.0)) *
                          (diag[static_cast<size_t>(a)] + diag[static_cast<size_t>(b)]);
            }
            Matrix& e = ch.at(a, b);
            e.resize(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    cplx tr = 0.0;
                    for (long m = 0; m < mot; ++m) tr += out(i * mot + m, j * mot + m);
                    e(i, j) = tr;
                }
        }
    }
    return ch;
}

SpinChannel per_fock_channel(const DriveProgram& program, const RealMatrix& pair_eta,
                             HamiltonianLevel level, const ErrorShift& shifts,
                             const NoiseSpec& noise, const std::vector<int>& fock_n,
                             double coupling, int cutoff_margin,
                             const PropagationOptions& opts, ChannelDiagnostics* diag) {
    const int n_modes = static_cast<int>(pair_eta.cols());
    std::vector<int> cutoffs(static_cast<size_t>(n_modes));
    for (int l = 0; l < n_modes; ++l)
        cutoffs[static_cast<size_t>(l)] =
            default_cutoff(fock_n[static_cast<size_t>(l)], coupling, cutoff_margin);

    for (int attempt = 0;; ++attempt) {
        const FockSpace space(2, cutoffs);
        const HamiltonianTerms ht = build_terms(program, pair_eta, space, level, shifts);
        try {
            SpinChannel ch;
            double leak = 0.0;
            const bool block = ht.spin_diagonal();
            if (noise.is_zero()) {
                ch = block ? channel_from_tau(unitary_tau(ht, fock_n, opts, &leak))
                           : unitary_channel_full(ht, fock_n, opts, &leak);
            } else {
                ch = block ? channel_from_tau(lindblad_tau(ht, noise, fock_n, opts, &leak))
                           : lindblad_channel_full(ht, noise, fock_n, opts, &leak);
            }
            if (!noise.is_zero() && leak > opts.leakage_tol)
                throw cutoff_too_small("per_fock_channel: dissipative leakage " +
                                       std::to_string(leak));
            if (diag) {
                diag->cutoffs = cutoffs;
                diag->cutoff_growths = attempt;
                diag->used_block_path = block;
                diag->leakage = leak;
            }
            return ch;
        } catch (const cutoff_too_small&) {
            if (attempt >= 3) throw;
            for (int& c : cutoffs) c = static_cast<int>(std::ceil(c * 1.5));
        }
    }
}

} // namespace iongate
