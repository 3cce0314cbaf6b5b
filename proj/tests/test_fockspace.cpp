#include <doctest.h>

#include "iongate/fockspace.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace iongate;

namespace {

// independent eigensolve oracle on a hand-assembled two-ion Hessian
NormalModes two_ion_oracle() {
    // equilibrium at +-a with a^3 = 1/4, separation d^3 = 2
    RealMatrix hess(2, 2);
    hess << 2.0, -1.0, -1.0, 2.0;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(hess);
    NormalModes nm;
    nm.ratios = es.eigenvalues().cwiseSqrt();
    nm.coeffs = es.eigenvectors();
    return nm;
}

// plain gradient descent on the chain potential (test-only oracle)
RealVector equilibrium_by_descent(int n) {
    RealVector u(n);
    for (int i = 0; i < n; ++i) u(i) = (i - 0.5 * (n - 1)) * 1.2;
    double step = 0.05;
    for (int iter = 0; iter < 200000; ++iter) {
        RealVector g(n);
        for (int i = 0; i < n; ++i) {
            g(i) = u(i);
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = u(i) - u(j);
                g(i) -= (d > 0 ? 1.0 : -1.0) / (d * d);
            }
        }
        u -= step * g;
        if (g.lpNorm<Eigen::Infinity>() < 1e-13) break;
    }
    return u;
}

// explicit series summation (30 terms), independent of displacement_block
cplx series_element(int order, double eta, int m_from, int m_to) {
    cplx acc = 0.0;
    for (int n = 0; n <= 30; ++n) {
        if (m_from - n < 0) break;
        if (m_from - n + n + order != m_to) continue; // fixed shift
        double coeff = 1.0;
        for (int k = 0; k < n; ++k) coeff *= (m_from - k);               // a^n
        double up = 1.0;
        for (int k = 0; k < n + order; ++k) up *= (m_from - n + 1 + k);  // a^dag^{n+k}
        double fact = 1.0;
        for (int k = 2; k <= n; ++k) fact *= k;
        double fact2 = 1.0;
        for (int k = 2; k <= n + order; ++k) fact2 *= k;
        acc += std::pow(cplx(0.0, eta), 2 * n + order) * std::sqrt(coeff * up) / (fact * fact2);
    }
    return acc;
}

} // namespace

TEST_CASE("normal modes: single ion is the COM mode") {
    const NormalModes nm = normal_modes(1);
    CHECK(nm.ratios(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nm.coeffs(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("normal modes: two ions match the direct eigensolve oracle") {
    const NormalModes nm = normal_modes(2);
    const NormalModes oracle = two_ion_oracle();
    REQUIRE(nm.ratios.size() == 2);
    CHECK(nm.ratios(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nm.ratios(1) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    for (int l = 0; l < 2; ++l)
        CHECK(nm.ratios(l) == doctest::Approx(oracle.ratios(l)).epsilon(1e-10));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(nm.coeffs(0, 0) == doctest::Approx(s));
    CHECK(nm.coeffs(1, 0) == doctest::Approx(s));
    CHECK(nm.coeffs(0, 1) == doctest::Approx(s));
    CHECK(nm.coeffs(1, 1) == doctest::Approx(-s));
}

TEST_CASE("normal modes: four ions, descent oracle and orthonormality") {
    const NormalModes nm = normal_modes(4);
    REQUIRE(nm.ratios.size() == 4);
    CHECK(nm.ratios(0) == doctest::Approx(1.0).epsilon(1e-10));
    for (int l = 1; l < 4; ++l) CHECK(nm.ratios(l) > nm.ratios(l - 1));

    const RealVector u_oracle = equilibrium_by_descent(4);
    const RealVector u = chain_equilibrium(4);
    for (int i = 0; i < 4; ++i) CHECK(u(i) == doctest::Approx(u_oracle(i)).epsilon(1e-8));

    const RealMatrix gram = nm.coeffs.transpose() * nm.coeffs;
    CHECK((gram - RealMatrix::Identity(4, 4)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("normal modes: orthonormality holds through N = 6") {
    for (int n = 2; n <= 6; ++n) {
        const NormalModes nm = normal_modes(n);
        const RealMatrix gram = nm.coeffs.transpose() * nm.coeffs;
        CHECK((gram - RealMatrix::Identity(n, n)).lpNorm<Eigen::Infinity>() < 1e-12);
        // sign convention: first nonzero entry per column positive
        for (int l = 0; l < n; ++l) {
            for (int j = 0; j < n; ++j) {
                if (std::abs(nm.coeffs(j, l)) > 1e-12) {
                    CHECK(nm.coeffs(j, l) > 0);
                    break;
                }
            }
        }
    }
}

TEST_CASE("normal modes: zero ions rejected") {
    CHECK_THROWS_AS(normal_modes(0), std::invalid_argument);
}

TEST_CASE("system spec: eta bounded by the coupling factor") {
    const SystemSpec sys = SystemSpec::linear_chain(3, 0.1);
    CHECK(sys.eta.lpNorm<Eigen::Infinity>() <= 0.1 + 1e-15);
    CHECK(sys.mode_ratios(0) == doctest::Approx(1.0));
}

TEST_CASE("displacement block: identity at zero coupling") {
    const Matrix d = displacement_block(0, 0.0, 8);
    CHECK((d - Matrix::Identity(9, 9)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("displacement block: first sideband element is i eta") {
    for (double eta : {0.01, 0.1, 0.3, -0.2}) {
        const Matrix d = displacement_block(1, eta, 10);
        CHECK(std::abs(d(1, 0) - cplx(0.0, eta)) < 1e-15);
        // against the explicit 30-term series oracle on higher elements too
        for (int m = 0; m <= 6; ++m)
            CHECK(std::abs(d(m + 1, m) - series_element(1, eta, m, m + 1)) < 1e-13);
    }
}

TEST_CASE("displacement block: red partner via conjugation") {
    const Matrix d2 = displacement_block(2, 0.17, 12);
    const Matrix dm2 = displacement_block(-2, 0.17, 12);
    CHECK((dm2 - Matrix(d2.adjoint())).lpNorm<Eigen::Infinity>() == 0.0);
    const Matrix d1 = displacement_block(1, 0.17, 12);
    const Matrix dm1 = displacement_block(-1, 0.17, 12);
    CHECK((dm1 + Matrix(d1.adjoint())).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("displacement block: cutoff below |order| rejected") {
    CHECK_THROWS_AS(displacement_block(3, 0.1, 2), std::invalid_argument);
}

TEST_CASE("displacement series: two-term truncation scales beyond k+3.5") {
    const int cutoff = 16;
    for (int k : {1, 2}) {
        std::vector<double> logs_eta, logs_err;
        for (double eta : {0.02, 0.05, 0.1}) {
            const Matrix d = displacement_block(k, eta, cutoff);
            Matrix lead = Matrix::Zero(cutoff + 1, cutoff + 1);
            for (int m = 0; m + k <= cutoff; ++m) {
                double fac = 1.0;
                for (int i = 2; i <= k; ++i) fac *= i;
                double amp = 1.0;
                for (int i = 1; i <= k; ++i) amp *= (m + i);
                lead(m + k, m) += std::pow(cplx(0, eta), k) / fac * std::sqrt(amp);
                double fac2 = fac * (k + 1);
                lead(m + k, m) +=
                    std::pow(cplx(0, eta), k + 2) / fac2 * std::sqrt(amp) * static_cast<double>(m);
            }
            // restrict to states below cutoff/2
            const Matrix diff = (d - lead).leftCols(cutoff / 2);
            logs_eta.push_back(std::log(eta));
            logs_err.push_back(std::log(diff.norm() + 1e-300));
        }
        const double slope = (logs_err[2] - logs_err[0]) / (logs_eta[2] - logs_eta[0]);
        CHECK(slope >= k + 3.5);
    }
}

TEST_CASE("operator constructors are bitwise deterministic") {
    const Matrix a = displacement_block(2, 0.123, 20);
    const Matrix b = displacement_block(2, 0.123, 20);
    REQUIRE(a.size() == b.size());
    for (long i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("fock space: dimensions and strides follow the documented ordering") {
    const FockSpace space(2, {3, 2});
    CHECK(space.total_dim() == 4 * 4 * 3);
    CHECK(space.motional_dim() == 12);
    CHECK(space.mode_stride(0) == 3);
    CHECK(space.mode_stride(1) == 1);
    // spin of ion 1 is the slowest index
    CHECK(space.spin_bit(0) == 2);
    CHECK(space.spin_bit(1) == 1);
    CHECK(space.occupation(7, 0) == 2);
    CHECK(space.occupation(7, 1) == 1);
}

TEST_CASE("embed: identity embeds to identity") {
    const FockSpace space(2, {2, 2});
    const Operator op = embed(Matrix::Identity(3, 3), Subsystem::mode(0), space);
    CHECK((op.dense() - Matrix::Identity(space.total_dim(), space.total_dim()))
              .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("embed: operators on distinct modes commute") {
    const FockSpace space(2, {3, 3});
    const Operator a1 = embed(annihilation_block(3), Subsystem::mode(0), space);
    const Operator a2d = embed(Matrix(annihilation_block(3).adjoint()), Subsystem::mode(1), space);
    const Matrix comm = a1.dense() * a2d.dense() - a2d.dense() * a1.dense();
    CHECK(comm.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("embed: pauli involution on ion 1") {
    const FockSpace space(2, {1, 1});
    const Operator sy = embed(sigma_y2(), Subsystem::spin(0), space);
    const Matrix sq = sy.dense() * sy.dense();
    CHECK((sq - Matrix::Identity(space.total_dim(), space.total_dim())).lpNorm<Eigen::Infinity>() <
          1e-15);
    CHECK(sy.is_hermitian());
    CHECK(sy.is_unitary());
}

TEST_CASE("embed: spectra preserved with codimension multiplicity") {
    const FockSpace space(1, {2, 1});
    Matrix block(3, 3);
    block << 1, 0.5, 0, 0.5, 2, 0.25, 0, 0.25, 5;
    const Operator op = embed(block, Subsystem::mode(0), space);
    Eigen::SelfAdjointEigenSolver<Matrix> small(block);
    Eigen::SelfAdjointEigenSolver<Matrix> big(op.dense());
    const long codim = space.total_dim() / 3;
    std::vector<double> expect;
    for (int i = 0; i < 3; ++i)
        for (long c = 0; c < codim; ++c) expect.push_back(small.eigenvalues()(i));
    std::sort(expect.begin(), expect.end());
    for (long i = 0; i < space.total_dim(); ++i)
        CHECK(big.eigenvalues()(i) == doctest::Approx(expect[static_cast<size_t>(i)])
                                          .epsilon(1e-10));
}

TEST_CASE("embed: dimension mismatch rejected") {
    const FockSpace space(2, {2, 2});
    CHECK_THROWS_AS(embed(Matrix::Identity(2, 2), Subsystem::mode(0), space),
                    std::invalid_argument);
}

TEST_CASE("thermal state: ground state at nbar 0") {
    const FockSpace space(0, {10});
    const ThermalWeights w = thermal_state({0.0}, space);
    CHECK(w.per_mode[0](0) == doctest::Approx(1.0));
    for (int n = 1; n <= 10; ++n) CHECK(w.per_mode[0](n) == 0.0);
}

TEST_CASE("thermal state: normalized and mean matches the direct sum") {
    const FockSpace space(0, {60});
    const ThermalWeights w = thermal_state({2.0}, space);
    double total = 0.0, mean = 0.0;
    for (int n = 0; n <= 60; ++n) {
        total += w.per_mode[0](n);
        mean += n * w.per_mode[0](n);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(mean - 2.0) < 1e-6);
}

TEST_CASE("thermal state: cutoff too small raises") {
    const FockSpace space(0, {5});
    CHECK_THROWS_AS(thermal_state({2.0}, space), cutoff_too_small);
}

TEST_CASE("default cutoff policy grows with occupation and coupling") {
    CHECK(default_cutoff(0, 0.05) == 15);
    CHECK(default_cutoff(10, 0.05) == 25);
    CHECK(default_cutoff(10, 0.5) >= 10 + 17);
}
