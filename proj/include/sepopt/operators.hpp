#pragma once

#include "sepopt/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <optional>
#include <utility>

namespace sepopt {

inline constexpr double kHermTolDefault = 1e-9;

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline double hermitian_defect(const CMatrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline double operator_norm(const CMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues()(0);
}

/// Dense complex square matrix validated to be Hermitian within tolerance.
/// Entries are stored symmetrized, so downstream spectral code may assume
/// exact hermiticity.
struct HermitianOperator {
    CMatrix entries;
    double herm_defect = 0.0;

    Index dim() const { return entries.rows(); }
};

inline HermitianOperator validate_hermitian(const CMatrix& raw, double tol = kHermTolDefault) {
    if (raw.rows() != raw.cols())
        throw InputError("validate_hermitian: matrix is not square (" + std::to_string(raw.rows()) +
                         "x" + std::to_string(raw.cols()) + ")");
    if (raw.rows() < 1) throw InputError("validate_hermitian: dimension must be >= 1");
    double defect = hermitian_defect(raw);
    if (defect > tol)
        throw InputError("validate_hermitian: hermiticity defect " + std::to_string(defect) +
                         " exceeds tolerance " + std::to_string(tol));
    HermitianOperator h;
    h.entries = 0.5 * (raw + raw.adjoint());
    h.herm_defect = defect;
    return h;
}

inline HermitianOperator symmetrize(const CMatrix& a) {
    if (a.rows() != a.cols()) throw InputError("symmetrize: matrix is not square");
    HermitianOperator h;
    h.entries = 0.5 * (a + a.adjoint());
    h.herm_defect = hermitian_defect(h.entries);
    return h;
}

/// Hilbert-Schmidt inner product Tr(Q* R).
inline Complex hs_inner(const CMatrix& q, const CMatrix& r) {
    if (q.rows() != r.rows() || q.cols() != r.cols())
        throw InputError("hs_inner: dimension mismatch");
    return (q.conjugate().cwiseProduct(r)).sum();
}

inline Complex hs_inner(const HermitianOperator& q, const HermitianOperator& r) {
    return hs_inner(q.entries, r.entries);
}

struct Eigenpair {
    double value;
    CVector vector;
};

/// Extreme eigenvalue and eigenvector of a Hermitian operator via a full
/// eigendecomposition (dims here are small, so iterative solvers are not worth
/// their edge cases).
inline Eigenpair extreme_eigenvalue(const HermitianOperator& h, OptMode mode) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h.entries);
    if (es.info() != Eigen::Success)
        throw NumericalError("extreme_eigenvalue: eigensolver failed to converge");
    Index idx = (mode == OptMode::Max) ? h.dim() - 1 : 0;  // ascending order
    return {es.eigenvalues()(idx), es.eigenvectors().col(idx)};
}

/// (<v| (x) I) Q (|v> (x) I): contracts the first tensor factor against a unit
/// vector, leaving an operator on the second factor.
inline HermitianOperator partial_contract(const HermitianOperator& q, const CVector& v) {
    Index da = v.size();
    if (da < 1 || q.dim() % da != 0)
        throw InputError("partial_contract: dim(Q) is not a multiple of dim(v)");
    Index db = q.dim() / da;
    CMatrix out = CMatrix::Zero(db, db);
    for (Index a = 0; a < da; ++a)
        for (Index a2 = 0; a2 < da; ++a2) {
            Complex c = std::conj(v(a)) * v(a2);
            if (c == Complex(0, 0)) continue;
            out += c * q.entries.block(a * db, a2 * db, db, db);
        }
    return symmetrize(out);
}

/// (I (x) <v|) Q (I (x) |v>): contraction over the second tensor factor.
inline HermitianOperator partial_contract_second(const HermitianOperator& q, const CVector& v) {
    Index db = v.size();
    if (db < 1 || q.dim() % db != 0)
        throw InputError("partial_contract_second: dim(Q) is not a multiple of dim(v)");
    Index da = q.dim() / db;
    CMatrix out = CMatrix::Zero(da, da);
    for (Index a = 0; a < da; ++a)
        for (Index a2 = 0; a2 < da; ++a2) {
            Complex s(0, 0);
            for (Index b = 0; b < db; ++b)
                for (Index b2 = 0; b2 < db; ++b2)
                    s += std::conj(v(b)) * q.entries(a * db + b, a2 * db + b2) * v(b2);
            out(a, a2) = s;
        }
    return symmetrize(out);
}

/// M terms, each a k-tuple of per-party factor matrices, with per-party width
/// bounds on the factor operator norms. Factors need not be Hermitian; only
/// the reconstructed sum must be.
struct DecomposedOperator {
    int k = 0;
    std::vector<Index> dims;                   // per-party dimension
    std::vector<std::vector<CMatrix>> terms;   // terms[i][t], t = 0..k-1
    RVector widths;

    int M() const { return static_cast<int>(terms.size()); }

    Index total_dim() const {
        Index d = 1;
        for (Index dt : dims) d *= dt;
        return d;
    }

    double width_product() const {
        double w = 1.0;
        for (int t = 0; t < k; ++t) w *= widths(t);
        return w;
    }
};

inline CMatrix reconstruct_dense(const DecomposedOperator& d) {
    Index dim = d.total_dim();
    CMatrix sum = CMatrix::Zero(dim, dim);
    for (const auto& term : d.terms) {
        CMatrix acc = term[0];
        for (int t = 1; t < d.k; ++t) acc = kron(acc, term[t]);
        sum += acc;
    }
    return sum;
}

inline HermitianOperator reconstruct(const DecomposedOperator& d, double tol = kHermTolDefault) {
    return validate_hermitian(reconstruct_dense(d), tol);
}

struct DecomposedValidateOptions {
    double tol = kHermTolDefault;
    // Reconstruction is dense in the product dimension; skip it past this size.
    Index reconstruct_dim_limit = 4096;
};

/// Checks structural consistency, width bounds, and (when the product
/// dimension is small enough) hermiticity of the reconstruction.
inline void validate_decomposed(const DecomposedOperator& d,
                                const DecomposedValidateOptions& opt = {}) {
    if (d.k < 2) throw InputError("decomposed operator: k must be >= 2");
    if (static_cast<int>(d.dims.size()) != d.k || d.widths.size() != d.k)
        throw InputError("decomposed operator: dims/widths arity does not match k");
    for (Index dt : d.dims)
        if (dt < 1) throw InputError("decomposed operator: party dimension must be >= 1");
    for (std::size_t i = 0; i < d.terms.size(); ++i) {
        if (static_cast<int>(d.terms[i].size()) != d.k)
            throw InputError("decomposed operator: term " + std::to_string(i) +
                             " does not have k factors");
        for (int t = 0; t < d.k; ++t) {
            const CMatrix& f = d.terms[i][t];
            if (f.rows() != d.dims[t] || f.cols() != d.dims[t])
                throw InputError("decomposed operator: factor (" + std::to_string(i) + "," +
                                 std::to_string(t) + ") has wrong dimension");
            double nrm = operator_norm(f);
            if (nrm > d.widths(t) + 1e-9)
                throw InputError("decomposed operator: factor (" + std::to_string(i) + "," +
                                 std::to_string(t) + ") norm " + std::to_string(nrm) +
                                 " exceeds width " + std::to_string(d.widths(t)));
        }
    }
    if (d.total_dim() <= opt.reconstruct_dim_limit && d.M() > 0) {
        double defect = hermitian_defect(reconstruct_dense(d));
        if (defect > opt.tol)
            throw InputError("decomposed operator: reconstruction hermiticity defect " +
                             std::to_string(defect));
    }
}

/// One pure product state per party plus the objective value it attains.
struct ProductStateWitness {
    std::vector<CVector> party_vectors;
    double value = 0.0;
};

inline void validate_witness(const ProductStateWitness& w, double tol = 1e-9) {
    for (const auto& v : w.party_vectors)
        if (std::abs(v.norm() - 1.0) > tol)
            throw InputError("product state witness: party vector is not unit norm");
}

/// Objective <Q, rho_1 (x) ... (x) rho_k> at a pure product witness.
inline double product_objective(const HermitianOperator& q, const ProductStateWitness& w) {
    CVector full = w.party_vectors.at(0);
    for (std::size_t t = 1; t < w.party_vectors.size(); ++t) {
        const CVector& v = w.party_vectors[t];
        CVector next(full.size() * v.size());
        for (Index i = 0; i < full.size(); ++i)
            next.segment(i * v.size(), v.size()) = full(i) * v;
        full = std::move(next);
    }
    if (full.size() != q.dim()) throw InputError("product_objective: dimension mismatch");
    return std::real(full.dot(q.entries * full));  // Eigen dot conjugates the left argument
}

// Common 2x2 blocks.
namespace pauli {
inline CMatrix I() { return CMatrix::Identity(2, 2); }
inline CMatrix X() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline CMatrix Y() {
    CMatrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}
inline CMatrix Z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
inline CMatrix by_index(int i) {
    switch (i) {
        case 0: return I();
        case 1: return X();
        case 2: return Y();
        default: return Z();
    }
}
}  // namespace pauli

}  // namespace sepopt
