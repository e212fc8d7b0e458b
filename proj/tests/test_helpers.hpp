#pragma once

#include <doctest.h>

#include "sepopt/core.hpp"
#include "sepopt/operators.hpp"

namespace test_helpers {

using namespace sepopt;

inline CMatrix random_matrix(SplitMix64& rng, Index d) {
    CMatrix m(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) m(i, j) = 0.5 * rng.cgaussian();
    return m;
}

inline HermitianOperator random_hermitian(SplitMix64& rng, Index d) {
    return symmetrize(random_matrix(rng, d));
}

// Random Hermitian rescaled to operator norm exactly `norm`.
inline HermitianOperator random_hermitian_unit(SplitMix64& rng, Index d, double norm = 1.0) {
    HermitianOperator h = random_hermitian(rng, d);
    double n = operator_norm(h.entries);
    if (n < 1e-12) return validate_hermitian(norm * CMatrix::Identity(d, d));
    return validate_hermitian(CMatrix(h.entries * (norm / n)));
}

inline CVector random_unit(SplitMix64& rng, Index d) {
    CVector v(d);
    for (Index i = 0; i < d; ++i) v(i) = rng.cgaussian();
    return v / v.norm();
}

inline CMatrix random_density(SplitMix64& rng, Index d) {
    CMatrix a = random_matrix(rng, d);
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace();
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline CVector ket(std::initializer_list<Complex> amps) {
    CVector v(static_cast<Index>(amps.size()));
    Index i = 0;
    for (Complex a : amps) v(i++) = a;
    return v;
}

inline CMatrix projector(const CVector& v) { return v * v.adjoint(); }

inline CVector bell_phi_plus() {
    CVector v(4);
    v << 1, 0, 0, 1;
    return v / std::sqrt(2.0);
}

inline CMatrix random_unitary2(SplitMix64& rng) {
    // QR of a Gaussian matrix; Q is Haar-ish and exactly unitary
    CMatrix g = random_matrix(rng, 2);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    return q;
}

}  // namespace test_helpers
