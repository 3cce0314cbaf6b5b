// magnus.hpp — numerical Magnus expansion to fourth order and least-squares
// decomposition of generators onto ladder-monomial / spin-power products.
#pragma once

#include "iongate/hamiltonian.hpp"

#include <array>
#include <functional>
#include <map>

namespace iongate {

struct MagnusResult {
    std::array<Matrix, 4> terms;      // anti-Hermitian generators, orders 1..4
    Matrix combined;                  // sum of computed terms
    std::array<double, 4> quad_error; // |term(grid) - term(2*grid)| per order
    int order = 4;
};

// Nested-commutator integrals of the expansion, truncated at `order` <= 4, evaluated
// by cumulative-integral recursion on a uniform grid (RK4 stepping of the coupled
// order-by-order generator equations; analytically identical to the iterated
// time-ordered integrals). The result is recomputed on a doubled grid; if any term
// moves by more than `tol`, a precision_error carrying the two estimates is thrown.
MagnusResult magnus_terms(const std::function<Matrix(double)>& h_of_t, double t_final,
                          int order, int grid, double tol = 1e-8);

MagnusResult magnus_terms(const HamiltonianTerms& ht, int order, int grid, double tol = 1e-8);

// Dense H(t) on the pair (x) motional space, assembled from the drive terms.
Matrix dense_hamiltonian(const HamiltonianTerms& ht, double t);

// --- generator decomposition --------------------------------------------------

struct MonomialKey {
    std::vector<int> p; // creation powers per mode
    std::vector<int> q; // annihilation powers per mode
    int r = 0;          // sigma_y power on ion 1 (0/1)
    int s = 0;          // sigma_y power on ion 2 (0/1)

    bool operator<(const MonomialKey& o) const {
        if (p != o.p) return p < o.p;
        if (q != o.q) return q < o.q;
        if (r != o.r) return r < o.r;
        return s < o.s;
    }
};

struct GeneratorDecomposition {
    std::map<MonomialKey, cplx> coeffs;
    double residual = 0.0; // Frobenius norm of gen - reconstruction
    FockSpace space;

    cplx at(std::vector<int> p, std::vector<int> q, int r, int s) const {
        const auto it = coeffs.find(MonomialKey{std::move(p), std::move(q), r, s});
        return it == coeffs.end() ? cplx(0.0) : it->second;
    }
    Matrix reconstruct() const;
};

// Least-squares projection of `gen` onto the (non-orthogonal) basis
// prod_l a_l^dag^{p_l} a_l^{q_l} (sy_1)^r (sy_2)^s with p_l + q_l <= max_power.
// The Gram matrix factorizes over shift/spin groups; a rank-deficient group
// (cutoff too small for max_power) raises invalid-argument.
GeneratorDecomposition decompose_generator(const Matrix& gen, const FockSpace& space,
                                           int max_power = 4);

// Dense basis element, exposed for tests.
Matrix monomial_operator(const MonomialKey& key, const FockSpace& space);

} // namespace iongate
