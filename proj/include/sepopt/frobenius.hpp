#pragma once

#include "sepopt/core.hpp"
#include "sepopt/nets.hpp"
#include "sepopt/operators.hpp"
#include "sepopt/sep_opt.hpp"

#include <Eigen/SVD>
#include <chrono>

namespace sepopt {

/// Spectrum of a PSD operator split at the threshold delta/2; only the kept
/// eigenpairs enter the search space.
struct SpectralTruncation {
    RVector eigenvalues;   // descending, clamped to >= 0
    CMatrix eigenvectors;  // columns matching eigenvalues
    double threshold = 0.0;
    std::vector<int> kept;  // indices with lambda >= threshold
    double frob_norm = 0.0;

    int gamma_size() const { return static_cast<int>(kept.size()); }
};

inline SpectralTruncation truncate_spectrum(const HermitianOperator& q, double delta,
                                            double psd_tol = 1e-9) {
    if (delta <= 0) throw InputError("truncate_spectrum: delta must be positive");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(q.entries);
    if (es.info() != Eigen::Success)
        throw NumericalError("truncate_spectrum: eigensolver failed");
    Index d = q.dim();
    SpectralTruncation t;
    t.threshold = 0.5 * delta;
    t.eigenvalues.resize(d);
    t.eigenvectors.resize(d, d);
    for (Index i = 0; i < d; ++i) {  // Eigen sorts ascending; flip to descending
        double lam = es.eigenvalues()(d - 1 - i);
        if (lam < -psd_tol)
            throw InputError("truncate_spectrum: negative eigenvalue " + std::to_string(lam) +
                             " (operator is not PSD)");
        t.eigenvalues(i) = std::max(lam, 0.0);
        t.eigenvectors.col(i) = es.eigenvectors().col(d - 1 - i);
    }
    t.frob_norm = std::sqrt(t.eigenvalues.squaredNorm());
    for (Index i = 0; i < d; ++i)
        if (t.eigenvalues(i) >= t.threshold) t.kept.push_back(static_cast<int>(i));
    double bound = t.frob_norm * t.frob_norm / (t.threshold * t.threshold);
    if (static_cast<double>(t.kept.size()) > bound + 1e-9)
        throw NumericalError("truncate_spectrum: |Gamma| exceeds ||Q||_F^2/eps^2");
    return t;
}

/// |phi_alpha> = sum_{t in Gamma} conj(alpha_t) sqrt(lambda_t) |Psi_t>; not
/// normalized in general.
inline CVector phi_alpha(const SpectralTruncation& t, const CVector& alpha) {
    if (alpha.size() != t.gamma_size())
        throw InputError("phi_alpha: alpha arity does not match |Gamma|");
    CVector out = CVector::Zero(t.eigenvectors.rows());
    for (int j = 0; j < t.gamma_size(); ++j)
        out += std::conj(alpha(j)) * std::sqrt(t.eigenvalues(t.kept[static_cast<std::size_t>(j)])) *
               t.eigenvectors.col(t.kept[static_cast<std::size_t>(j)]);
    return out;
}

struct SchmidtResult {
    RVector coefficients;  // descending, >= 0
    CMatrix left;          // columns u_i
    CMatrix right;         // columns v_i
};

/// Schmidt decomposition of a bipartite vector: reshape to dA x dB row-major
/// and take the SVD; mu_1 equals the maximum product-vector overlap.
inline SchmidtResult schmidt_max(const CVector& psi, Index da, Index db) {
    if (da < 1 || db < 1 || psi.size() != da * db)
        throw InputError("schmidt_max: length is not dA * dB");
    CMatrix m(da, db);
    for (Index a = 0; a < da; ++a)
        for (Index b = 0; b < db; ++b) m(a, b) = psi(a * db + b);
    Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SchmidtResult r;
    r.coefficients = svd.singularValues();
    r.left = svd.matrixU();
    r.right = svd.matrixV().conjugate();  // psi = sum_i mu_i u_i (x) conj(V col i)
    return r;
}

struct FrobeniusOptions {
    std::int64_t ball_cap = 200000000;
    bool fix_phase = true;
    double psd_tol = 1e-9;
};

struct FrobeniusInfo {
    int gamma_size = 0;
    std::int64_t ball_points = 0;
    double ball_eps = 0.0;
    double frob_norm = 0.0;
    double mu1 = 0.0;
    CVector best_alpha;
    ProductStateWitness product_witness;
};

namespace detail {

inline double sigma_max(const CMatrix& m) {
    if (m.rows() == 2 && m.cols() == 2) {
        // largest singular value of a 2x2 via the Gram matrix
        double g00 = std::norm(m(0, 0)) + std::norm(m(1, 0));
        double g11 = std::norm(m(0, 1)) + std::norm(m(1, 1));
        Complex g01 = std::conj(m(0, 0)) * m(0, 1) + std::conj(m(1, 0)) * m(1, 1);
        double mean = 0.5 * (g00 + g11);
        double disc = std::sqrt(std::max(0.0, 0.25 * (g00 - g11) * (g00 - g11) + std::norm(g01)));
        return std::sqrt(std::max(0.0, mean + disc));
    }
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace detail

/// Spectral truncation at delta/2 plus a delta/(4 ||Q||_F) net of the unit
/// ball of C^{|Gamma|}; OPT is the best mu_1(phi_alpha)^2 over the net, within
/// delta of OptSep(Q). The squared coefficient is the objective value
/// <Q~, uv>, which is what the error analysis bounds.
struct FrobeniusReport {
    OptimizationReport base;
    FrobeniusInfo info;
};

inline FrobeniusReport optimize_frobenius(const HermitianOperator& q, Index da, Index db,
                                          double delta, const FrobeniusOptions& opt = {}) {
    if (da * db != q.dim()) throw InputError("optimize_frobenius: dims do not factor dim(Q)");
    if (delta <= 0) throw InputError("optimize_frobenius: delta must be positive");
    auto t_start = std::chrono::steady_clock::now();

    SpectralTruncation trunc = truncate_spectrum(q, delta, opt.psd_tol);
    FrobeniusReport rep;
    rep.base.algorithm = "frobenius";
    rep.base.mode = OptMode::Max;
    rep.base.delta = delta;
    rep.base.effective_error = delta;
    rep.base.budget.net_contribution = {0.5 * delta, 0.5 * delta};  // truncation + ball net
    rep.base.budget.delta = delta;
    rep.base.budget.effective_error = delta;
    rep.info.gamma_size = trunc.gamma_size();
    rep.info.frob_norm = trunc.frob_norm;

    if (trunc.gamma_size() == 0) {
        // Q~ = 0: every product state scores below delta/2
        rep.base.opt_value = 0.0;
        rep.info.ball_points = 0;
        rep.info.ball_eps = 0.0;
        rep.base.stats.wall_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - t_start)
                                     .count();
        return rep;
    }

    const double ball_eps = delta / (4.0 * trunc.frob_norm);
    rep.info.ball_eps = ball_eps;
    BallNetOptions bopt;
    bopt.cap = opt.ball_cap;
    bopt.fix_phase = opt.fix_phase;
    BallNetStream stream(trunc.gamma_size(), ball_eps, bopt);
    rep.info.ball_points = stream.count();

    // W(:, j) = sqrt(lambda_j) Psi_j so phi_alpha = W conj(alpha)
    CMatrix w(q.dim(), trunc.gamma_size());
    for (int j = 0; j < trunc.gamma_size(); ++j)
        w.col(j) = std::sqrt(trunc.eigenvalues(trunc.kept[static_cast<std::size_t>(j)])) *
                   trunc.eigenvectors.col(trunc.kept[static_cast<std::size_t>(j)]);

    double best = -1.0;
    std::int64_t best_index = -1;
    CVector best_alpha;
    std::int64_t index = 0;
    CVector phi(q.dim());
    CMatrix reshaped(da, db);
    while (auto alpha = stream.next()) {
        phi.noalias() = w * alpha->conjugate();
        for (Index a = 0; a < da; ++a)
            for (Index b = 0; b < db; ++b) reshaped(a, b) = phi(a * db + b);
        double mu1 = detail::sigma_max(reshaped);
        double val = mu1 * mu1;
        if (val > best + 1e-15) {  // strict improvement keeps the first index on ties
            best = val;
            best_index = index;
            best_alpha = *alpha;
        }
        ++index;
    }
    rep.base.stats.raw_total = static_cast<double>(stream.count());
    rep.base.stats.tuples_evaluated = index;

    rep.base.opt_value = best;
    rep.info.best_alpha = best_alpha;
    rep.info.mu1 = std::sqrt(std::max(0.0, best));
    rep.base.witness.indices = {best_index};
    rep.base.witness.tuple = {best_alpha};

    SchmidtResult schmidt = schmidt_max(phi_alpha(trunc, best_alpha), da, db);
    rep.info.product_witness.party_vectors = {schmidt.left.col(0), schmidt.right.col(0)};
    rep.info.product_witness.value =
        product_objective(q, rep.info.product_witness);
    rep.base.witness.spectral_vector = schmidt.left.col(0);
    rep.base.witness.eigenvalue = best;

    rep.base.stats.wall_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t_start)
                                 .count();
    return rep;
}

}  // namespace sepopt
