#pragma once

#include "sepopt/core.hpp"
#include "sepopt/operators.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <optional>

namespace sepopt {

using CPoint = CVector;  // point in C^M

/// A sequence (Q_1..Q_M) of operators on one space with operator norms bounded
/// by w. The factors coming out of circuit propagation are not Hermitian, so
/// hermiticity is not required here; the q-map uses the Hilbert-Schmidt pairing
/// q_i(rho) = Tr(Q_i^* rho) throughout.
struct ObservableFamily {
    std::vector<CMatrix> ops;
    double w = 1.0;

    int M() const { return static_cast<int>(ops.size()); }
    Index dim() const { return ops.empty() ? 0 : ops.front().rows(); }
};

inline void validate_family(const ObservableFamily& f) {
    if (f.ops.empty()) throw InputError("observable family: needs at least one operator");
    if (f.w <= 0) throw InputError("observable family: width must be positive");
    Index d = f.ops.front().rows();
    for (std::size_t i = 0; i < f.ops.size(); ++i) {
        const CMatrix& q = f.ops[i];
        if (q.rows() != q.cols() || q.rows() != d)
            throw InputError("observable family: operator " + std::to_string(i) +
                             " has inconsistent dimensions");
        double nrm = operator_norm(q);
        if (nrm > f.w + 1e-9)
            throw InputError("observable family: operator " + std::to_string(i) + " norm " +
                             std::to_string(nrm) + " exceeds width " + std::to_string(f.w));
    }
}

inline void validate_density(const CMatrix& rho, double tol = 1e-9) {
    if (rho.rows() != rho.cols()) throw InputError("density matrix: not square");
    if (hermitian_defect(rho) > tol) throw InputError("density matrix: not Hermitian");
    if (std::abs(std::real(rho.trace()) - 1.0) > tol || std::abs(std::imag(rho.trace())) > tol)
        throw InputError("density matrix: trace is not 1");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()));
    if (es.info() != Eigen::Success) throw NumericalError("density validation: eigensolver failed");
    if (es.eigenvalues().minCoeff() < -tol)
        throw InputError("density matrix: negative eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()));
}

inline CPoint q_vector_unchecked(const ObservableFamily& f, const CMatrix& rho) {
    CPoint out(f.M());
    for (int i = 0; i < f.M(); ++i) out(i) = hs_inner(f.ops[i], rho);
    return out;
}

/// q(rho) = (<Q_1, rho>, ..., <Q_M, rho>).
inline CPoint q_vector(const ObservableFamily& f, const CMatrix& rho) {
    validate_family(f);
    if (rho.rows() != f.dim()) throw InputError("q_vector: density dimension mismatch");
    validate_density(rho);
    return q_vector_unchecked(f, rho);
}

inline CPoint q_vector_pure(const ObservableFamily& f, const CVector& psi) {
    CPoint out(f.M());
    for (int i = 0; i < f.M(); ++i) out(i) = psi.dot(f.ops[i].adjoint() * psi);
    return out;
}

struct MMWOptions {
    long iter_cap = 1000000;
    // Net grids are inflated by eps' past the width disk; points up to
    // w + point_width_slack are admitted, with the step size and loss offsets
    // derived from the effective width so the additive-error guarantee holds.
    double point_width_slack = 0.0;
    // Tightens the loss range to alpha = 2(||p||_1 + M w) <= 4 M w_eff, which
    // shortens T while keeping the additive-error guarantee; the default keeps
    // the printed gamma = eps/(8 M w) schedule.
    bool sharp_alpha = false;
    bool check_invariants = false;
    bool record_phase_digest = false;
    // Called once per iteration when set; test hook, cold path.
    std::function<void(long t, const CMatrix& rho, const CPoint& q, const CPoint& z,
                       double payoff, const CMatrix& loss)>
        observer;
};

struct DistanceCertificate {
    double value = 0.0;  // d~: dis(p) <= value <= dis(p) + eps
    double eps = 0.0;
    double gamma = 0.0;
    long iterations = 0;
    std::optional<std::uint64_t> phase_digest;
};

namespace detail {

// rho proportional to exp(gamma * A) for Hermitian A, spectral-shifted so the
// exponentials cannot overflow.
inline CMatrix gibbs_density(const CMatrix& a, double gamma) {
    Index d = a.rows();
    if (d == 2) {
        double m = 0.5 * std::real(a(0, 0) + a(1, 1));
        double del = 0.5 * std::real(a(0, 0) - a(1, 1));
        Complex c = a(0, 1);
        double s = std::sqrt(del * del + std::norm(c));
        CMatrix rho(2, 2);
        if (s < 1e-300) {
            rho << 0.5, 0.0, 0.0, 0.5;
            return rho;
        }
        double t = std::tanh(gamma * s) / s;
        rho(0, 0) = 0.5 * (1.0 + t * del);
        rho(1, 1) = 0.5 * (1.0 - t * del);
        rho(0, 1) = 0.5 * t * c;
        rho(1, 0) = 0.5 * t * std::conj(c);
        (void)m;
        return rho;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("mmw: weight eigensolver failed");
    RVector lam = es.eigenvalues();
    double shift = gamma * lam.maxCoeff();
    RVector wts(d);
    for (Index i = 0; i < d; ++i) wts(i) = std::exp(gamma * lam(i) - shift);
    wts /= wts.sum();
    return es.eigenvectors() * wts.asDiagonal() * es.eigenvectors().adjoint();
}

// Allocation-free MMW loop for d = 2 (the loop runs millions of times during
// net filtering). Mirrors the generic path exactly, with manual real
// arithmetic: rho = (I + tanh(gamma s)/s * B)/2 for the accumulated Hermitian
// B, and q_i = sum_jk conj(Q_i(j,k)) rho(j,k).
inline double mmw_payoff_avg_2x2(const CPoint& p, const std::vector<CMatrix>& ops, double gamma,
                                 long T) {
    const int M = static_cast<int>(ops.size());
    struct Op {
        double pr, pi;             // target point coordinate
        double c00r, c00i, c11r, c11i;  // conj(Q) diagonal
        double c01r, c01i, c10r, c10i;  // conj(Q) off-diagonal
        double hd0, hd1, kd0, kd1;      // Herm(Q), Herm(iQ) diagonals (real)
        double hor, hoi, kor, koi;      // their (0,1) entries
    };
    std::vector<Op> op(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) {
        const CMatrix& q = ops[static_cast<std::size_t>(i)];
        Op& o = op[static_cast<std::size_t>(i)];
        o.pr = std::real(p(i));
        o.pi = std::imag(p(i));
        o.c00r = std::real(q(0, 0)), o.c00i = -std::imag(q(0, 0));
        o.c11r = std::real(q(1, 1)), o.c11i = -std::imag(q(1, 1));
        o.c01r = std::real(q(0, 1)), o.c01i = -std::imag(q(0, 1));
        o.c10r = std::real(q(1, 0)), o.c10i = -std::imag(q(1, 0));
        CMatrix h = 0.5 * (q + q.adjoint());
        CMatrix k = Complex(0, 0.5) * (q - q.adjoint());
        o.hd0 = std::real(h(0, 0)), o.hd1 = std::real(h(1, 1));
        o.kd0 = std::real(k(0, 0)), o.kd1 = std::real(k(1, 1));
        o.hor = std::real(h(0, 1)), o.hoi = std::imag(h(0, 1));
        o.kor = std::real(k(0, 1)), o.koi = std::imag(k(0, 1));
    }
    double a00 = 0, a11 = 0, a01r = 0, a01i = 0;
    double payoff_sum = 0;
    for (long t = 0; t < T; ++t) {
        double del = 0.5 * (a00 - a11);
        double s2 = del * del + a01r * a01r + a01i * a01i;
        double fac;
        if (s2 < 1e-300) {
            fac = gamma;
        } else {
            double s = std::sqrt(s2);
            fac = std::tanh(gamma * s) / s;
        }
        double r00 = 0.5 * (1.0 + fac * del);
        double r11 = 0.5 * (1.0 - fac * del);
        double r01r = 0.5 * fac * a01r, r01i = 0.5 * fac * a01i;
        for (int i = 0; i < M; ++i) {
            const Op& o = op[static_cast<std::size_t>(i)];
            // q_i = c00 r00 + c01 r01 + c10 conj(r01) + c11 r11
            double qr = o.c00r * r00 + o.c11r * r11 + o.c01r * r01r - o.c01i * r01i +
                        o.c10r * r01r + o.c10i * r01i;
            double qi = o.c00i * r00 + o.c11i * r11 + o.c01r * r01i + o.c01i * r01r -
                        o.c10r * r01i + o.c10i * r01r;
            double vr = o.pr - qr, vi = o.pi - qi;
            double c2 = vr * vr + vi * vi;
            double phr = 1.0, phi = 0.0;
            if (c2 > 0) {
                double c = std::sqrt(c2);
                payoff_sum += c;
                double inv = 1.0 / c;
                phr = vr * inv;
                phi = vi * inv;
            }
            a00 += phr * o.hd0 + phi * o.kd0;
            a11 += phr * o.hd1 + phi * o.kd1;
            a01r += phr * o.hor + phi * o.kor;
            a01i += phr * o.hoi + phi * o.koi;
        }
    }
    return payoff_sum / static_cast<double>(T);
}

}  // namespace detail

/// Matrix-multiplicative-weights approximation of dis(p), the l1 distance from
/// p to the image S(Q) = {q(rho)}. Returns d~ with
/// dis(p) <= d~ <= dis(p) + eps.
///
/// Loss matrices are N(t) = Re<p,z(t)> I - (Q(t)+Q(t)*)/2 + 2Mw I with
/// Q(t) = sum_i e^{+i phi_i} Q_i; with the Hilbert-Schmidt q-map this is the
/// sign convention under which <rho, N(t) - 2Mw I> = Re<p - q(rho), z(t)>
/// holds identically (asserted under check_invariants).
inline DistanceCertificate mmw_distance(const CPoint& p, const ObservableFamily& f, double eps,
                                        const MMWOptions& opt = {}) {
    const int M = f.M();
    const Index d = f.dim();
    if (p.size() != M) throw InputError("mmw_distance: point arity does not match family");
    if (eps <= 0) throw InputError("mmw_distance: eps must be positive");
    double p_inf = 0.0, p_one = 0.0;
    for (int i = 0; i < M; ++i) {
        double a = std::abs(p(i));
        p_inf = std::max(p_inf, a);
        p_one += a;
    }
    if (p_inf > f.w + opt.point_width_slack + 1e-9)
        throw InputError("mmw_distance: |p_i| exceeds width bound");
    const double w = std::max(f.w, p_inf);  // effective width

    const double gamma = opt.sharp_alpha
                             ? std::min(eps / (4.0 * (p_one + M * f.w)), 0.49)
                             : std::min(eps / (8.0 * M * w), 0.49);
    const double lnd = d > 1 ? std::log(static_cast<double>(d)) : 0.0;
    long T = std::max<long>(1, static_cast<long>(std::ceil(lnd / (gamma * gamma))));
    if (T > opt.iter_cap)
        throw CapExceeded("mmw_distance: required iterations " + std::to_string(T) +
                              " exceed cap " + std::to_string(opt.iter_cap),
                          static_cast<double>(T), static_cast<double>(opt.iter_cap));

    if (d == 2 && !opt.check_invariants && !opt.observer && !opt.record_phase_digest) {
        DistanceCertificate cert;
        cert.value = detail::mmw_payoff_avg_2x2(p, f.ops, gamma, T);
        cert.eps = eps;
        cert.gamma = gamma;
        cert.iterations = T;
        return cert;
    }

    // Accumulated loss is c I - Herm(sum_i Z_i Q_i) with Z_i the summed phase
    // factors; only the Herm part matters after normalization.
    CMatrix accum = CMatrix::Zero(d, d);
    std::vector<CMatrix> herm_q(M), herm_iq(M);
    for (int i = 0; i < M; ++i) {
        herm_q[i] = 0.5 * (f.ops[i] + f.ops[i].adjoint());
        herm_iq[i] = Complex(0, 0.5) * (f.ops[i] - f.ops[i].adjoint());
    }

    double payoff_sum = 0.0;
    std::uint64_t digest = 0xcbf29ce484222325ULL;
    CPoint q(M), z(M);
    const CMatrix id = CMatrix::Identity(d, d);

    for (long t = 1; t <= T; ++t) {
        CMatrix rho = (t == 1) ? CMatrix(id / static_cast<double>(d))
                               : detail::gibbs_density(accum, gamma);
        for (int i = 0; i < M; ++i) q(i) = hs_inner(f.ops[i], rho);

        double payoff = 0.0;
        double re_pz = 0.0;
        for (int i = 0; i < M; ++i) {
            Complex v = p(i) - q(i);
            double c = std::abs(v);
            Complex phase = (c == 0.0) ? Complex(1, 0) : v / c;  // e^{i phi_i}
            z(i) = std::conj(phase);
            payoff += c;
            re_pz += std::real(p(i) * z(i));
            // Herm(e^{i phi} Q_i) = cos(phi) Herm(Q_i) + sin(phi) Herm(i Q_i)
            accum += std::real(phase) * herm_q[i] + std::imag(phase) * herm_iq[i];
        }
        payoff_sum += payoff;

        if (opt.record_phase_digest)
            for (int i = 0; i < M; ++i)
                digest = fnv1a_mix(digest,
                                   static_cast<std::uint64_t>(
                                       std::llround(std::real(z(i)) * 68719476736.0)) ^
                                       (static_cast<std::uint64_t>(
                                            std::llround(std::imag(z(i)) * 68719476736.0))
                                        << 21));

        if (opt.check_invariants || opt.observer) {
            CMatrix herm_qt = CMatrix::Zero(d, d);
            for (int i = 0; i < M; ++i) {
                Complex phase = std::conj(z(i));
                herm_qt += std::real(phase) * herm_q[i] + std::imag(phase) * herm_iq[i];
            }
            CMatrix loss = (re_pz + 2.0 * M * w) * id - herm_qt;
            if (opt.check_invariants) {
                double lhs = std::real(hs_inner(rho, CMatrix(loss - 2.0 * M * w * id)));
                if (std::abs(lhs - payoff) > 1e-9)
                    throw NumericalError("mmw: payoff identity violated by " +
                                         std::to_string(std::abs(lhs - payoff)));
                Eigen::SelfAdjointEigenSolver<CMatrix> es(loss);
                if (es.eigenvalues().minCoeff() < -1e-9 ||
                    es.eigenvalues().maxCoeff() > 4.0 * M * w + 1e-9)
                    throw NumericalError("mmw: loss matrix outside [0, 4Mw]");
            }
            if (opt.observer) opt.observer(t, rho, q, z, payoff, loss);
        }
    }

    DistanceCertificate cert;
    cert.value = payoff_sum / static_cast<double>(T);
    cert.eps = eps;
    cert.gamma = gamma;
    cert.iterations = T;
    if (opt.record_phase_digest) cert.phase_digest = digest;
    return cert;
}

// ---------------------------------------------------------------------------
// Exact (certified) small-instance reference for dis(p).
// ---------------------------------------------------------------------------

/// Deterministic net over pure states of C^d: hyperspherical angles
/// theta_0..theta_{d-2} in [0, pi/2] and phases phi_0..phi_{d-2} in [0, 2pi),
/// with the first amplitude kept real nonnegative (global phase fixed).
inline std::vector<CVector> pure_state_net(Index d, double grid, std::int64_t cap = 2000000) {
    if (d < 1) throw InputError("pure_state_net: dimension must be >= 1");
    if (grid <= 0) throw InputError("pure_state_net: grid must be positive");
    if (d == 1) {
        CVector one(1);
        one(0) = 1.0;
        return {one};
    }
    const double half_pi = 1.5707963267948966;
    const double two_pi = 6.283185307179586;
    const int n_theta = static_cast<int>(std::ceil(half_pi / grid)) + 1;  // both endpoints
    const int n_phi = std::max(4, static_cast<int>(std::ceil(two_pi / grid)));
    const Index na = d - 1;  // number of (theta, phi) slots
    double count = 1.0;
    for (Index j = 0; j < na; ++j) count *= static_cast<double>(n_theta) * n_phi;
    if (count > static_cast<double>(cap))
        throw CapExceeded("pure_state_net: " + std::to_string(count) + " points exceed cap",
                          count, static_cast<double>(cap));

    std::vector<CVector> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<int> ti(na, 0), fi(na, 0);
    for (;;) {
        CVector psi(d);
        double sines = 1.0;
        for (Index j = 0; j < na; ++j) {
            double theta = (half_pi * ti[j]) / (n_theta - 1);
            double amp = sines * std::cos(theta);
            if (j == 0)
                psi(0) = Complex(amp, 0);
            else {
                double phi = (two_pi * fi[j - 1]) / n_phi;
                psi(j) = amp * Complex(std::cos(phi), std::sin(phi));
            }
            sines *= std::sin(theta);
        }
        double phi_last = (two_pi * fi[na - 1]) / n_phi;
        psi(d - 1) = sines * Complex(std::cos(phi_last), std::sin(phi_last));
        double nrm = psi.norm();
        if (nrm > 1e-12) out.push_back(psi / nrm);
        Index j = 0;  // odometer: phi slots fastest, then thetas
        for (; j < 2 * na; ++j) {
            if (j < na) {
                if (++fi[j] < n_phi) break;
                fi[j] = 0;
            } else {
                if (++ti[j - na] < n_theta) break;
                ti[j - na] = 0;
            }
        }
        if (j == 2 * na) break;
    }
    return out;
}

struct ExactDistanceOptions {
    std::int64_t net_cap = 2000000;
    int net_fw_iters = 200;      // Frank-Wolfe steps restricted to net vertices
    int polish_iters = 4000;     // Frank-Wolfe steps with exact eigenvector vertices
    double gap_tol = 1e-7;
    int max_support = 0;         // 0: M+1
};

struct ExactDistanceResult {
    double value = 0.0;  // upper bound on dis(p)
    double gap = 0.0;    // certified: value - gap <= dis(p) <= value
    std::int64_t net_points = 0;
    int iterations = 0;
};

namespace detail {

inline double l1_dist(const CPoint& a, const CPoint& b) {
    double s = 0;
    for (Index i = 0; i < a.size(); ++i) s += std::abs(a(i) - b(i));
    return s;
}

// Subgradient direction u of y -> ||p - y||_1 negated: u_i = unit(p_i - y_i).
inline CPoint l1_units(const CPoint& p, const CPoint& y) {
    CPoint u(p.size());
    for (Index i = 0; i < p.size(); ++i) {
        Complex r = p(i) - y(i);
        double c = std::abs(r);
        u(i) = (c < 1e-300) ? Complex(0, 0) : r / c;
    }
    return u;
}

inline double line_search_l1(const CPoint& p, const CPoint& y, const CPoint& v) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 70; ++it) {
        double m1 = lo + (hi - lo) / 3.0;
        double m2 = hi - (hi - lo) / 3.0;
        if (l1_dist(p, y + m1 * (v - y)) <= l1_dist(p, y + m2 * (v - y)))
            hi = m2;
        else
            lo = m1;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Upper-bounds dis(p) by minimizing ||p - q(rho)||_1 over the convex hull of a
/// pure-state net image, by local search over convex combinations of up to M+1
/// net points, then refining with exact linear-minimization steps over the full
/// state set. The returned gap certifies value - gap <= dis(p) <= value.
inline ExactDistanceResult exact_distance_small_full(const CPoint& p, const ObservableFamily& f,
                                                     double grid,
                                                     const ExactDistanceOptions& opt = {}) {
    if (f.dim() > 4 || f.M() > 3)
        throw InputError("exact_distance_small: dimensions too large for exhaustive netting");
    if (p.size() != f.M()) throw InputError("exact_distance_small: point arity mismatch");

    std::vector<CVector> net = pure_state_net(f.dim(), grid, opt.net_cap);
    std::vector<CPoint> images(net.size());
    for (std::size_t j = 0; j < net.size(); ++j) images[j] = q_vector_pure(f, net[j]);

    ExactDistanceResult res;
    res.net_points = static_cast<std::int64_t>(net.size());

    // start from the best single net image
    std::size_t best = 0;
    double best_val = detail::l1_dist(p, images[0]);
    for (std::size_t j = 1; j < images.size(); ++j) {
        double val = detail::l1_dist(p, images[j]);
        if (val < best_val) {
            best_val = val;
            best = j;
        }
    }
    CPoint y = images[best];
    std::vector<std::pair<std::size_t, double>> support{{best, 1.0}};
    const int max_support = opt.max_support > 0 ? opt.max_support : f.M() + 1;

    // phase 1: vertices restricted to the net
    for (int it = 0; it < opt.net_fw_iters; ++it) {
        CPoint u = detail::l1_units(p, y);
        double score_y = 0;
        for (Index i = 0; i < p.size(); ++i) score_y += std::real(std::conj(u(i)) * y(i));
        std::size_t vtx = 0;
        double score_v = -1e300;
        for (std::size_t j = 0; j < images.size(); ++j) {
            double s = 0;
            for (Index i = 0; i < p.size(); ++i) s += std::real(std::conj(u(i)) * images[j](i));
            if (s > score_v) {
                score_v = s;
                vtx = j;
            }
        }
        if (score_v - score_y < 1e-12) break;
        double step = detail::line_search_l1(p, y, images[vtx]);
        if (step < 1e-15) break;
        for (auto& [idx, wgt] : support) wgt *= (1.0 - step);
        bool found = false;
        for (auto& [idx, wgt] : support)
            if (idx == vtx) {
                wgt += step;
                found = true;
            }
        if (!found) support.emplace_back(vtx, step);
        if (static_cast<int>(support.size()) > max_support) {
            std::size_t drop = 0;
            for (std::size_t s = 1; s < support.size(); ++s)
                if (support[s].second < support[drop].second) drop = s;
            support.erase(support.begin() + static_cast<std::ptrdiff_t>(drop));
            double total = 0;
            for (auto& [idx, wgt] : support) total += wgt;
            for (auto& [idx, wgt] : support) wgt /= total;
        }
        y = CPoint::Zero(p.size());
        for (auto& [idx, wgt] : support) y += wgt * images[idx];
        ++res.iterations;
    }

    // phase 2: exact linear minimization over all pure states (largest
    // eigenvector of Herm(sum_i conj(u_i) Q_i^*)); gives the duality gap.
    double final_gap = 1e300;
    for (int it = 0; it < opt.polish_iters; ++it) {
        CPoint u = detail::l1_units(p, y);
        CMatrix s = CMatrix::Zero(f.dim(), f.dim());
        for (int i = 0; i < f.M(); ++i) {
            CMatrix t = std::conj(u(i)) * f.ops[i].adjoint();
            s += 0.5 * (t + t.adjoint());
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> es(s);
        if (es.info() != Eigen::Success)
            throw NumericalError("exact_distance_small: vertex eigensolver failed");
        CVector chi = es.eigenvectors().col(f.dim() - 1);
        double score_y = 0;
        for (Index i = 0; i < p.size(); ++i) score_y += std::real(std::conj(u(i)) * y(i));
        double gap = es.eigenvalues()(f.dim() - 1) - score_y;
        final_gap = std::min(final_gap, std::max(gap, 0.0));
        if (gap < opt.gap_tol) break;
        CPoint v = q_vector_pure(f, chi);
        double step = detail::line_search_l1(p, y, v);
        y = y + step * (v - y);
        ++res.iterations;
    }

    res.value = detail::l1_dist(p, y);
    res.gap = final_gap;
    return res;
}

inline double exact_distance_small(const CPoint& p, const ObservableFamily& f, double grid) {
    return exact_distance_small_full(p, f, grid).value;
}

}  // namespace sepopt
