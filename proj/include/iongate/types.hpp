// types.hpp — shared aliases, Pauli blocks, Kronecker helpers
#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace iongate {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// Spin convention: |0> = spin-down, sigma_+|0> = |1>, sigma_y = i(sigma_- - sigma_+).
inline Matrix sigma_y2() {
    Matrix m(2, 2);
    m << cplx(0, 0), cplx(0, 1), cplx(0, -1), cplx(0, 0);
    return m;
}

inline Matrix sigma_x2() {
    Matrix m(2, 2);
    m << cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0);
    return m;
}

inline Matrix sigma_z2() {
    Matrix m(2, 2);
    m << cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(-1, 0);
    return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Thrown when the requested entangling phase exceeds what the drive family can reach.
class infeasible_target : public std::runtime_error {
public:
    infeasible_target(const std::string& what, double max_phi)
        : std::runtime_error(what), max_attainable_phi(max_phi) {}
    double max_attainable_phi;
};

// Thrown when a truncated Fock space is too small for the requested operation.
class cutoff_too_small : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown by thermal averaging when the per-Fock table does not cover enough mass.
class needs_more_states : public std::runtime_error {
public:
    needs_more_states(const std::string& what, double missing)
        : std::runtime_error(what), missing_mass(missing) {}
    double missing_mass;
};

// Thrown when a grid-convergence check fails; carries the two estimates.
class precision_error : public std::runtime_error {
public:
    precision_error(const std::string& what, double coarse, double fine)
        : std::runtime_error(what), estimate_coarse(coarse), estimate_fine(fine) {}
    double estimate_coarse;
    double estimate_fine;
};

} // namespace iongate
