#include <doctest.h>

#include "iongate/propagate.hpp"

#include <cmath>

using namespace iongate;

namespace {

struct Setup {
    SystemSpec sys;
    DriveProgram prog;
    FockSpace space;
    HamiltonianTerms ht;

    Setup(double coupling, int cutoff, GateVariant variant = GateVariant::Robust,
          HamiltonianLevel level = HamiltonianLevel::ExactSeries)
        : sys(SystemSpec::linear_chain(2, coupling)), prog(), space(2, {cutoff, cutoff}) {
        GateTarget tgt;
        tgt.variant = variant;
        prog = synthesize(sys, tgt, 0.02);
        ht = build_terms(prog, sys.eta, space, level, ErrorShift::none(2));
    }
};

HamiltonianTerms free_terms(const FockSpace& space, double horizon) {
    DriveProgram empty;
    empty.gate_time = horizon;
    const RealMatrix eta = RealMatrix::Constant(2, space.n_modes(), 0.05);
    HamiltonianTerms ht;
    ht.space = space;
    ht.gate_time = horizon;
    return ht;
}

} // namespace

TEST_CASE("propagate: zero hamiltonian gives the identity") {
    const FockSpace space(2, {3});
    const HamiltonianTerms ht = free_terms(space, 10.0);
    PropagationOptions opts;
    opts.steps = 10;
    const Matrix u = propagate_unitary(ht, opts);
    CHECK((u - Matrix::Identity(space.total_dim(), space.total_dim()))
              .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("propagate: unitarity defect below 1e-9 on the robust program") {
    const Setup s(0.1, 6);
    PropagationOptions opts;
    opts.steps = 4000;
    opts.leakage_check = false;
    const Matrix u = propagate_unitary(s.ht, opts);
    const long dim = s.space.total_dim();
    CHECK((u.adjoint() * u - Matrix::Identity(dim, dim)).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("propagate: richardson self-convergence orders") {
    const Setup s(0.1, 5);
    const auto defect = [&](Integrator integ, int steps) {
        PropagationOptions o1, o2;
        o1.steps = steps;
        o2.steps = 2 * steps;
        o1.integrator = o2.integrator = integ;
        o1.leakage_check = o2.leakage_check = false;
        return (propagate_unitary(s.ht, o1) - propagate_unitary(s.ht, o2)).norm();
    };
    // midpoint: documented order 2
    const double m1 = defect(Integrator::ExponentialMidpoint, 200);
    const double m2 = defect(Integrator::ExponentialMidpoint, 400);
    const double order_mid = std::log2(m1 / m2);
    MESSAGE("midpoint order ", order_mid);
    CHECK(order_mid >= 2.0 - 0.15);
    // commutator-free scheme: order 4
    const double c1 = defect(Integrator::CommutatorFree4, 100);
    const double c2 = defect(Integrator::CommutatorFree4, 200);
    const double order_cf = std::log2(c1 / c2);
    MESSAGE("cf4 order ", order_cf);
    CHECK(order_cf >= 4.0 - 0.25);
}

TEST_CASE("propagate: state batch agrees with the full propagator") {
    const Setup s(0.08, 5);
    PropagationOptions opts;
    opts.steps = 600;
    opts.leakage_check = false;
    const Matrix u = propagate_unitary(s.ht, opts);
    std::vector<Vector> states;
    Vector v0 = Vector::Zero(s.space.total_dim());
    v0(3) = 1.0;
    states.push_back(v0);
    propagate_states(s.ht, opts, states);
    CHECK((states[0] - u.col(3)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("propagate: sigma_y blocks assemble to the full unitary") {
    const Setup s(0.1, 4);
    PropagationOptions opts;
    opts.steps = 400;
    opts.leakage_check = false;
    const Matrix u = propagate_unitary(s.ht, opts);
    const long mot = s.space.motional_dim();
    const Matrix v = kron(pair_y_basis(), Matrix::Identity(mot, mot));
    const Matrix uy = v.adjoint() * u * v;
    for (int b = 0; b < 4; ++b) {
        const Matrix ub = propagate_block_unitary(s.ht, pair_signs(b), opts);
        CHECK((uy.block(b * mot, b * mot, mot, mot) - ub).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("propagate: leakage check trips on an overdriven space") {
    const SystemSpec sys = SystemSpec::linear_chain(2, 0.1);
    DriveProgram prog;
    prog.gate_time = 2.0 * kPi / 0.02;
    prog.detuning = 0.02;
    prog.entries[{0, 0, 1}] = {{cplx(0.1, 0.0), 0.02}}; // strong near-resonant tone
    const FockSpace space(2, {4, 4});
    const HamiltonianTerms ht =
        build_terms(prog, sys.eta, space, HamiltonianLevel::ExactSeries, ErrorShift::none(2));
    PropagationOptions opts;
    opts.steps = 400;
    std::vector<Vector> states;
    Vector v0 = Vector::Zero(space.total_dim());
    v0(0) = 1.0;
    states.push_back(v0);
    CHECK_THROWS_AS(propagate_states(ht, opts, states), cutoff_too_small);
}

TEST_CASE("lindblad: zero rates reduce to the unitary channel") {
    const Setup s(0.1, 4);
    PropagationOptions opts;
    opts.steps = 500;
    opts.leakage_check = false;
    const Matrix u = propagate_unitary(s.ht, opts);
    const long dim = s.space.total_dim();
    Vector v0 = Vector::Zero(dim);
    v0(1) = 1.0;
    const Matrix rho0 = v0 * v0.adjoint();
    const Matrix rho = propagate_lindblad(s.ht, NoiseSpec::none(2), rho0, opts);
    CHECK((rho - u * rho0 * u.adjoint()).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("lindblad: damped mode matches the analytic occupation decay") {
    // free single mode, pure loss at rate g: <n(t)> = n0 exp(-g t)
    const FockSpace space(2, {12});
    const double horizon = 5.0;
    HamiltonianTerms ht = free_terms(space, horizon);
    NoiseSpec noise = NoiseSpec::none(1);
    const double g = 0.2;
    noise.gamma_minus[0] = g;
    const int n0 = 6;
    Matrix r0 = Matrix::Zero(13, 13);
    r0(n0, n0) = 1.0;
    PropagationOptions opts;
    opts.steps = 2000;
    const Matrix r = propagate_lindblad_block(ht, noise, pair_signs(0), pair_signs(0), r0, opts);
    double mean = 0.0;
    for (int n = 0; n <= 12; ++n) mean += n * std::real(r(n, n));
    CHECK(std::abs(mean - n0 * std::exp(-g * horizon)) < 1e-6);
    CHECK(std::abs(std::real(r.trace()) - 1.0) < 1e-8);
}

TEST_CASE("lindblad: pure dephasing damps coherences gaussianly in (n - m)") {
    const FockSpace space(2, {6});
    const double horizon = 3.0;
    HamiltonianTerms ht = free_terms(space, horizon);
    NoiseSpec noise = NoiseSpec::none(1);
    const double g = 0.15;
    noise.gamma_dephase[0] = g;
    Vector v = Vector::Zero(7);
    v(0) = v(2) = v(5) = 1.0 / std::sqrt(3.0);
    const Matrix r0 = v * v.adjoint();
    PropagationOptions opts;
    opts.steps = 1500;
    const Matrix r = propagate_lindblad_block(ht, noise, pair_signs(0), pair_signs(0), r0, opts);
    for (int n : {0, 2, 5}) {
        for (int m : {0, 2, 5}) {
            const double expect =
                r0(n, m).real() * std::exp(-g * (n - m) * (n - m) * horizon / 2.0);
            CHECK(std::abs(r(n, m) - expect) < 1e-6);
        }
    }
}

TEST_CASE("lindblad: trace, hermiticity and positivity are preserved") {
    const Setup s(0.1, 4);
    PropagationOptions opts;
    opts.steps = 800;
    opts.leakage_check = false;
    NoiseSpec noise = NoiseSpec::uniform(2e-4, 2);
    const long dim = s.space.total_dim();
    Vector v0 = Vector::Zero(dim);
    v0(0) = 1.0;
    const Matrix rho0 = v0 * v0.adjoint();
    const Matrix rho = propagate_lindblad(s.ht, noise, rho0, opts);
    CHECK(std::abs(rho.trace() - cplx(1.0)) < 1e-8);
    CHECK((rho - rho.adjoint()).lpNorm<Eigen::Infinity>() < 1e-8);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    CHECK(es.eigenvalues().minCoeff() > -1e-7);
}

TEST_CASE("lindblad: unphysical initial states are rejected") {
    const Setup s(0.1, 3);
    PropagationOptions opts;
    const long dim = s.space.total_dim();
    Matrix bad = Matrix::Identity(dim, dim); // trace != 1
    CHECK_THROWS_AS(propagate_lindblad(s.ht, NoiseSpec::none(2), bad, opts),
                    std::invalid_argument);
    Matrix neg = Matrix::Zero(dim, dim);
    neg(0, 0) = 2.0;
    neg(1, 1) = -1.0;
    CHECK_THROWS_AS(propagate_lindblad(s.ht, NoiseSpec::none(2), neg, opts),
                    std::invalid_argument);
}

TEST_CASE("ms single-mode drive reproduces the closed-form evolution at weak coupling") {
    const SystemSpec sys = SystemSpec::linear_chain(2, 1e-4);
    GateTarget tgt;
    tgt.variant = GateVariant::MsSingleMode;
    const double delta = 0.02;
    const DriveProgram prog = synthesize_ms(sys, tgt, delta);
    const double omega = prog.entries.at({0, 0, 1})[0].amplitude.real();
    const FockSpace space(2, {8, 2});
    const HamiltonianTerms ht = build_terms(prog, sys.eta, space,
                                            HamiltonianLevel::SelectedSidebands,
                                            ErrorShift::none(2));
    const double T = prog.gate_time;

    // closed form per sigma_y block: exp(i c^2 Phi(t)) D(c alpha(t)) |0>, alpha = int F
    const auto analytic = [&](double c, double t) {
        const cplx alpha = omega * (std::exp(kI * delta * t) - 1.0) / (kI * delta);
        const double phi =
            omega * omega * (t - std::sin(delta * t) / delta) / delta; // int (1-cos)/delta
        const cplx beta = c * alpha;
        Vector psi = Vector::Zero(space.motional_dim());
        double lognorm = -0.5 * std::norm(beta);
        for (int n = 0; n <= 8; ++n) {
            double logfac = 0.0;
            for (int k = 2; k <= n; ++k) logfac += std::log(static_cast<double>(k));
            psi(n * space.mode_stride(0)) =
                std::pow(beta, n) * std::exp(lognorm - 0.5 * logfac);
        }
        return Vector(std::exp(kI * c * c * phi) * psi);
    };

    PropagationOptions opts;
    opts.steps = 3000;
    opts.leakage_check = false;
    for (int b : {0, 3}) { // c = +2 and -2 blocks carry the displacement
        const auto signs = pair_signs(b);
        const double c = signs[0] + signs[1];
        std::vector<Vector> states;
        Vector v0 = Vector::Zero(space.motional_dim());
        v0(0) = 1.0;
        states.push_back(v0);
        propagate_block_states(ht, signs, opts, states);
        const cplx overlap = analytic(c, T).dot(states[0]);
        CHECK(std::abs(overlap) > 1.0 - 1e-6);
        CHECK(std::abs(overlap - cplx(1.0)) < 1e-3); // phase matches too
    }
}

TEST_CASE("perturbative dissipation: zero rates vanish, trace-free always") {
    const Setup s(0.1, 4);
    PropagationOptions opts;
    opts.steps = 400;
    const DyadMap zero_map =
        perturbative_dissipation_map(s.ht, NoiseSpec::none(2), {0, 0}, opts);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            CHECK(zero_map(a, b).lpNorm<Eigen::Infinity>() < 1e-14);

    const DyadMap map =
        perturbative_dissipation_map(s.ht, NoiseSpec::uniform(1e-4, 2), {1, 0}, opts);
    for (int a = 0; a < 4; ++a) CHECK(std::abs(map(a, a).trace()) < 1e-8);

    Matrix rho_s = Matrix::Zero(4, 4);
    rho_s(0, 0) = 1.0;
    const Matrix delta = perturbative_dissipation(s.ht, NoiseSpec::uniform(1e-4, 2), rho_s,
                                                  {1, 0}, opts);
    CHECK(std::abs(delta.trace()) < 1e-10);
}

TEST_CASE("perturbative dissipation: first order against the full master equation") {
    const Setup s(0.1, 5);
    PropagationOptions opts;
    opts.steps = 700;
    opts.leakage_check = false;
    const Matrix u = propagate_unitary(s.ht, opts);
    const long dim = s.space.total_dim();
    const long mot = s.space.motional_dim();
    const double T = s.ht.gate_time;

    // spin input |psi><psi|, psi = (|00> + |11>)/sqrt(2), motion |1,0>
    Vector v0 = Vector::Zero(dim);
    const long m_idx = s.space.mode_stride(0);
    v0(0 * mot + m_idx) = 1.0 / std::sqrt(2.0);
    v0(3 * mot + m_idx) = 1.0 / std::sqrt(2.0);
    const Matrix rho0 = v0 * v0.adjoint();
    Matrix rho_s0 = Matrix::Zero(4, 4);
    rho_s0(0, 0) = rho_s0(0, 3) = rho_s0(3, 0) = rho_s0(3, 3) = 0.5;

    std::vector<double> log_g, log_err;
    for (double gt : {0.005, 0.01, 0.02}) {
        const double g = gt / T;
        const NoiseSpec noise = NoiseSpec::uniform(g, 2);
        const Matrix rho_full = propagate_lindblad(s.ht, noise, rho0, opts);
        const Matrix rho_rot = u.adjoint() * rho_full * u;
        Matrix rho_s = Matrix::Zero(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (long m = 0; m < mot; ++m) rho_s(i, j) += rho_rot(i * mot + m, j * mot + m);
        const Matrix delta = perturbative_dissipation(s.ht, noise, rho_s0, {1, 0}, opts);
        const double err = (rho_s - rho_s0 - delta).norm();
        log_g.push_back(std::log(gt));
        log_err.push_back(std::log(err));
    }
    const double slope = (log_err[2] - log_err[0]) / (log_g[2] - log_g[0]);
    MESSAGE("perturbative-dissipation residual exponent ", slope);
    CHECK(slope >= 1.8);
}

TEST_CASE("ms reference unitary: identity at zero phase, bell state at pi/8") {
    CHECK((ms_reference_unitary(0.0, 2) - Matrix::Identity(4, 4)).lpNorm<Eigen::Infinity>() <
          1e-14);

    const double phi = kPi / 8;
    const Matrix u = ms_reference_unitary(phi, 2);
    // analytic oracle: generator 2 sy sy squares to 4, U = cos(2phi) + i sin(2phi) sy sy
    const Matrix syy = kron(sigma_y2(), sigma_y2());
    const Matrix oracle = std::cos(2 * phi) * Matrix::Identity(4, 4) +
                          kI * std::sin(2 * phi) * syy;
    CHECK((u - oracle).lpNorm<Eigen::Infinity>() < 1e-13);

    // Bell output: (|00> - i|11>)/sqrt(2) under sy = i(s_- - s_+), |0> = down
    Vector in = Vector::Zero(4);
    in(0) = 1.0;
    const Vector out = u * in;
    CHECK(std::abs(out(0) - cplx(1.0 / std::sqrt(2.0), 0.0)) < 1e-12);
    CHECK(std::abs(out(3) - cplx(0.0, -1.0 / std::sqrt(2.0))) < 1e-12);
    CHECK(std::abs(out(1)) + std::abs(out(2)) < 1e-14);

    // commutes with its own generator
    Matrix gen = Matrix::Zero(4, 4);
    gen += 2.0 * syy;
    CHECK((u * gen - gen * u).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("ms reference unitary: all-pairs generator on four ions") {
    const Matrix u = ms_reference_unitary(0.1, 4, true);
    CHECK(u.rows() == 16);
    CHECK((u.adjoint() * u - Matrix::Identity(16, 16)).lpNorm<Eigen::Infinity>() < 1e-12);
}
