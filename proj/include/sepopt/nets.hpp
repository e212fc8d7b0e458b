#pragma once

#include "sepopt/core.hpp"
#include "sepopt/distance.hpp"
#include "sepopt/operators.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace sepopt {

// ---------------------------------------------------------------------------
// Per-coordinate disk net T_eps' over {|z| <= w}.
// ---------------------------------------------------------------------------

/// Square grid with spacing eps_prime/sqrt(2) intersected with the disk of
/// radius w + eps_prime; the inflation keeps the boundary |z| = w covered.
struct DiskNet {
    double w = 0.0;
    double eps_prime = 0.0;
    double spacing = 0.0;
    std::vector<Complex> points;  // ordered by (re index, im index)

    int size() const { return static_cast<int>(points.size()); }
};

inline DiskNet disk_net(double w, double eps_prime, std::int64_t cap = 10000000) {
    if (w <= 0) throw InputError("disk_net: radius must be positive");
    if (eps_prime <= 0) throw InputError("disk_net: resolution must be positive");
    DiskNet net;
    net.w = w;
    net.eps_prime = eps_prime;
    net.spacing = eps_prime / std::sqrt(2.0);
    const double radius = w + eps_prime;
    const long k = static_cast<long>(std::floor(radius / net.spacing));
    const double bound = (2 * k + 1) * static_cast<double>(2 * k + 1);
    if (bound > static_cast<double>(cap) * 4.0)  // cheap pre-bound before counting
        throw CapExceeded("disk_net: grid of up to " + std::to_string(bound) +
                              " points exceeds cap",
                          bound, static_cast<double>(cap));
    const double r2 = radius * radius + 1e-12;
    std::int64_t count = 0;
    for (long i = -k; i <= k; ++i)
        for (long j = -k; j <= k; ++j) {
            double x = i * net.spacing, y = j * net.spacing;
            if (x * x + y * y <= r2) ++count;
        }
    if (count > cap)
        throw CapExceeded("disk_net: " + std::to_string(count) + " points exceed cap",
                          static_cast<double>(count), static_cast<double>(cap));
    net.points.reserve(static_cast<std::size_t>(count));
    for (long i = -k; i <= k; ++i)
        for (long j = -k; j <= k; ++j) {
            double x = i * net.spacing, y = j * net.spacing;
            if (x * x + y * y <= r2) net.points.emplace_back(x, y);
        }
    return net;
}

// ---------------------------------------------------------------------------
// Raw net R_eps: M-fold product of disk nets, streamed.
// ---------------------------------------------------------------------------

/// Lazily yields all |T_eps'|^M tuples (eps' = eps/M) in a fixed odometer
/// order, last coordinate fastest.
class RawNetStream {
public:
    RawNetStream(int m, double w, double eps, std::int64_t disk_cap = 10000000,
                 std::int64_t raw_cap = 10000000000LL)
        : m_(m) {
        if (m < 1) throw InputError("raw_net: M must be >= 1");
        base_ = disk_net(w, eps / m, disk_cap);
        total_ = 1.0;
        for (int t = 0; t < m; ++t) total_ *= static_cast<double>(base_.size());
        if (total_ > static_cast<double>(raw_cap))
            throw CapExceeded("raw_net: " + std::to_string(total_) +
                                  " tuples exceed cap before iteration",
                              total_, static_cast<double>(raw_cap));
        idx_.assign(m, 0);
    }

    const DiskNet& base() const { return base_; }
    double total_count() const { return total_; }

    std::optional<CPoint> next() {
        if (done_) return std::nullopt;
        CPoint p(m_);
        for (int t = 0; t < m_; ++t) p(t) = base_.points[static_cast<std::size_t>(idx_[t])];
        int t = m_ - 1;
        for (; t >= 0; --t) {
            if (++idx_[t] < base_.size()) break;
            idx_[t] = 0;
        }
        if (t < 0) done_ = true;
        return p;
    }

private:
    int m_;
    DiskNet base_;
    double total_ = 0;
    std::vector<int> idx_;
    bool done_ = false;
};

// ---------------------------------------------------------------------------
// Filtered net N_eps: raw-net points kept when the MMW distance estimate says
// dis <= eps (+ oracle slack).
// ---------------------------------------------------------------------------

struct NetPoint {
    CPoint coords;
    double dis_estimate = 0.0;
    bool accepted = false;
};

struct QspaceNetOptions {
    double eps = 0.1;
    double eps_mmw = 0.05;
    bool filter = true;  // diagnostic --no-filter mode when false
    std::int64_t disk_cap = 10000000;
    std::int64_t raw_cap = 10000000000LL;
    long mmw_iter_cap = 1000000;
    int lb_probes = 64;   // certified lower-bound probe directions per family
    int dual_iters = 24;  // supergradient refinement steps per surviving leaf
    // Shortened (still exact-guarantee) MMW schedule for filter calls; see
    // MMWOptions::sharp_alpha.
    bool sharp_mmw = true;
    std::function<void(std::int64_t leaves_visited)> progress;
    std::int64_t progress_stride = 100000;
};

struct NetEnumStats {
    double raw_total = 0;            // |T|^M
    std::int64_t leaves_visited = 0; // leaves surviving subtree pruning
    std::int64_t oracle_calls = 0;
    std::int64_t accepted = 0;
};

namespace detail {

// Bounding rectangle of the numerical range {Tr(Q^* rho)}: real part ranges
// over spec(Herm(Q)), imaginary part over spec((i/2)(Q - Q^*)).
struct RangeRect {
    double re_lo, re_hi, im_lo, im_hi;

    double dist(Complex z) const {
        double dx = std::max({re_lo - z.real(), 0.0, z.real() - re_hi});
        double dy = std::max({im_lo - z.imag(), 0.0, z.imag() - im_hi});
        return std::hypot(dx, dy);
    }
};

inline RangeRect range_rect(const CMatrix& q) {
    CMatrix h = 0.5 * (q + q.adjoint());
    CMatrix k = Complex(0, 0.5) * (q - q.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> eh(h), ek(k);
    if (eh.info() != Eigen::Success || ek.info() != Eigen::Success)
        throw NumericalError("range_rect: eigensolver failed");
    return {eh.eigenvalues().minCoeff(), eh.eigenvalues().maxCoeff(),
            ek.eigenvalues().minCoeff(), ek.eigenvalues().maxCoeff()};
}

// Probe direction z with |z_i| = 1 and the precomputed value
// max_rho Re<q(rho), z> = lambda_max(Herm(sum_i z_i Q_i^*)); any feasible z
// yields the certified bound dis(p) >= Re<p,z> - lambda.
struct LowerBoundProbe {
    CPoint z;
    double lambda;
};

inline double probe_lambda(const ObservableFamily& f, const CPoint& z) {
    CMatrix sum = CMatrix::Zero(f.dim(), f.dim());
    for (int i = 0; i < f.M(); ++i) {
        CMatrix t = z(i) * f.ops[i].adjoint();
        sum += 0.5 * (t + t.adjoint());
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sum);
    if (es.info() != Eigen::Success) throw NumericalError("probe_lambda: eigensolver failed");
    return es.eigenvalues().maxCoeff();
}

inline std::vector<LowerBoundProbe> make_probes(const ObservableFamily& f, int count) {
    std::vector<LowerBoundProbe> probes;
    if (count <= 0 || f.M() < 2) return probes;
    const int m = f.M();
    // the full {1,-1,i,-i}^M grid when small, random phases otherwise
    double full = std::pow(4.0, m);
    if (full <= std::max(count, 256)) {
        const Complex units[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (long code = 0; code < static_cast<long>(full); ++code) {
            CPoint z(m);
            long c = code;
            for (int i = 0; i < m; ++i) {
                z(i) = units[c & 3];
                c >>= 2;
            }
            probes.push_back({z, probe_lambda(f, z)});
        }
        return probes;
    }
    SplitMix64 rng(0x5eb01dULL);
    probes.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        CPoint z(m);
        for (int i = 0; i < m; ++i) {
            if (s == 0) {
                z(i) = Complex(1, 0);
            } else if (s == 1) {
                z(i) = Complex(i % 2 == 0 ? 1 : -1, 0);
            } else {
                double th = 6.283185307179586 * rng.uniform();
                z(i) = Complex(std::cos(th), std::sin(th));
            }
        }
        probes.push_back({z, probe_lambda(f, z)});
    }
    return probes;
}

// Supergradient ascent on the concave dual
//   g(z) = Re<p,z> - lambda_max(Herm(sum_i z_i Q_i^*)),   ||z||_inf <= 1;
// every iterate value is a certified lower bound on dis(p). Used to reject
// points whose distance provably exceeds the filter threshold.
class DualBounder {
public:
    explicit DualBounder(const ObservableFamily& f) : m_(f.M()), dim_(f.dim()) {
        for (const CMatrix& q : f.ops) {
            herm_.push_back(0.5 * (q + q.adjoint()));
            // Herm(i Q^*) = -(i/2)(Q - Q^*)
            iherm_.push_back(Complex(0, -0.5) * (q - q.adjoint()));
        }
    }

    // Starts from z0 (best probe); returns the best bound found, stopping
    // early once it exceeds stop_above.
    double lower_bound(const CPoint& p, const CPoint& z0, double lb0, double stop_above,
                       int iters) const {
        std::vector<double> x(static_cast<std::size_t>(m_)), y(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            x[static_cast<std::size_t>(i)] = std::real(z0(i));
            y[static_cast<std::size_t>(i)] = std::imag(z0(i));
        }
        double best = lb0;
        CMatrix s(dim_, dim_);
        for (int it = 0; it < iters && best <= stop_above; ++it) {
            s.setZero();
            for (int i = 0; i < m_; ++i)
                s += x[static_cast<std::size_t>(i)] * herm_[static_cast<std::size_t>(i)] +
                     y[static_cast<std::size_t>(i)] * iherm_[static_cast<std::size_t>(i)];
            double lam;
            CVector psi;
            if (dim_ == 2) {
                double mm = 0.5 * std::real(s(0, 0) + s(1, 1));
                double de = 0.5 * std::real(s(0, 0) - s(1, 1));
                Complex c = s(0, 1);
                double r = std::sqrt(de * de + std::norm(c));
                lam = mm + r;
                psi.resize(2);
                if (r < 1e-14) {
                    psi << 1, 0;
                } else {
                    psi(0) = Complex(de + r, 0);
                    psi(1) = std::conj(c);
                    double n = psi.norm();
                    if (n < 1e-14) {
                        psi(0) = c;
                        psi(1) = Complex(r - de, 0);
                        n = psi.norm();
                    }
                    psi /= n;
                }
            } else {
                Eigen::SelfAdjointEigenSolver<CMatrix> es(s);
                lam = es.eigenvalues()(dim_ - 1);
                psi = es.eigenvectors().col(dim_ - 1);
            }
            double val = 0;
            for (int i = 0; i < m_; ++i)
                val += std::real(p(i)) * x[static_cast<std::size_t>(i)] -
                       std::imag(p(i)) * y[static_cast<std::size_t>(i)];
            best = std::max(best, val - lam);
            double step = 0.5 / std::sqrt(1.0 + it);
            for (int i = 0; i < m_; ++i) {
                double hq = std::real(psi.dot(herm_[static_cast<std::size_t>(i)] * psi));
                double kq = std::real(psi.dot(iherm_[static_cast<std::size_t>(i)] * psi));
                double& xi = x[static_cast<std::size_t>(i)];
                double& yi = y[static_cast<std::size_t>(i)];
                xi += step * (std::real(p(i)) - hq);
                yi += step * (-std::imag(p(i)) - kq);
                double nn = xi * xi + yi * yi;
                if (nn > 1.0) {
                    double inv = 1.0 / std::sqrt(nn);
                    xi *= inv;
                    yi *= inv;
                }
            }
        }
        return best;
    }

private:
    int m_;
    Index dim_;
    std::vector<CMatrix> herm_, iherm_;
};

}  // namespace detail

/// Streaming enumeration of the filtered net. Yields exactly the raw-net
/// points whose MMW estimate d~ satisfies d~ <= eps + eps_mmw (soundness: no
/// point with true dis <= eps is rejected; kept points have
/// dis <= eps + 2 eps_mmw). Subtree pruning uses certified lower bounds on
/// dis, so the yielded sequence matches the unpruned filter exactly.
class FilteredNet {
public:
    FilteredNet(const ObservableFamily& f, const QspaceNetOptions& opt)
        : family_(f), opt_(opt), m_(f.M()) {
        validate_family(f);
        base_ = disk_net(f.w, opt.eps / m_, opt.disk_cap);
        stats_.raw_total = 1.0;
        for (int t = 0; t < m_; ++t) stats_.raw_total *= static_cast<double>(base_.size());
        if (stats_.raw_total > static_cast<double>(opt.raw_cap))
            throw CapExceeded("filtered_net: raw count " + std::to_string(stats_.raw_total) +
                                  " exceeds cap before iteration",
                              stats_.raw_total, static_cast<double>(opt.raw_cap));
        threshold_ = opt.eps + opt.eps_mmw;
        if (opt.filter) {
            coord_dist_.assign(static_cast<std::size_t>(m_),
                               std::vector<double>(base_.points.size(), 0.0));
            suffix_min_.assign(static_cast<std::size_t>(m_) + 1, 0.0);
            for (int i = 0; i < m_; ++i) {
                detail::RangeRect rect = detail::range_rect(f.ops[i]);
                double lo = 1e300;
                for (std::size_t g = 0; g < base_.points.size(); ++g) {
                    coord_dist_[i][g] = rect.dist(base_.points[g]);
                    lo = std::min(lo, coord_dist_[i][g]);
                }
                coord_min_.push_back(lo);
            }
            for (int i = m_ - 1; i >= 0; --i) suffix_min_[i] = suffix_min_[i + 1] + coord_min_[i];
            probes_ = detail::make_probes(f, opt.lb_probes);
            if (opt.dual_iters > 0) dual_.emplace(f);
        }
        idx_.assign(m_, 0);
        prefix_.assign(m_, 0.0);
        scratch_point_.resize(m_);
        level_ = 0;
        idx_[0] = -1;
    }

    const DiskNet& base() const { return base_; }
    const NetEnumStats& stats() const { return stats_; }
    double raw_total() const { return stats_.raw_total; }

    /// Index range of the first coordinate; subtrees over distinct first
    /// coordinates are independent (used for parallel partitioning).
    int first_axis_size() const { return base_.size(); }

    /// Next yielded point in stream order together with its raw stream index.
    std::optional<std::pair<NetPoint, std::int64_t>> next() {
        std::optional<std::pair<NetPoint, std::int64_t>> out;
        while (!done_ && !out) out = step();
        return out;
    }

    /// Walks only the subtree with first coordinate i0 (stream order inside).
    /// Used by parallel drivers; cb(point, stream_index).
    void walk_first(int i0, const std::function<void(const NetPoint&, std::int64_t)>& cb,
                    NetEnumStats& stats) const {
        WalkScratch scratch(m_);
        scratch.idx[0] = i0;
        if (opt_.filter) {
            scratch.prefix[0] = coord_dist_[0][static_cast<std::size_t>(i0)];
            if (scratch.prefix[0] + suffix_min_[1] > threshold_ + 1e-12) return;
        }
        walk_rec(1, scratch, cb, stats);
    }

private:
    struct WalkScratch {
        std::vector<int> idx;
        std::vector<double> prefix;
        CPoint point;

        explicit WalkScratch(int m)
            : idx(static_cast<std::size_t>(m), 0),
              prefix(static_cast<std::size_t>(m), 0.0),
              point(m) {}
    };

    void walk_rec(int level, WalkScratch& scratch,
                  const std::function<void(const NetPoint&, std::int64_t)>& cb,
                  NetEnumStats& stats) const {
        if (level == m_) {
            process_leaf(scratch.idx, scratch.point, cb, stats);
            return;
        }
        for (int g = 0; g < base_.size(); ++g) {
            scratch.idx[static_cast<std::size_t>(level)] = g;
            if (opt_.filter) {
                double p = scratch.prefix[static_cast<std::size_t>(level - 1)] +
                           coord_dist_[static_cast<std::size_t>(level)][static_cast<std::size_t>(g)];
                if (p + suffix_min_[static_cast<std::size_t>(level) + 1] > threshold_ + 1e-12)
                    continue;
                scratch.prefix[static_cast<std::size_t>(level)] = p;
            }
            walk_rec(level + 1, scratch, cb, stats);
        }
    }

    void process_leaf(const std::vector<int>& idx, CPoint& p,
                      const std::function<void(const NetPoint&, std::int64_t)>& cb,
                      NetEnumStats& stats) const {
        ++stats.leaves_visited;
        if (opt_.progress && stats.leaves_visited % opt_.progress_stride == 0)
            opt_.progress(stats.leaves_visited);
        for (int t = 0; t < m_; ++t)
            p(t) = base_.points[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])];
        std::int64_t stream_index = 0;
        for (int t = 0; t < m_; ++t)
            stream_index = stream_index * base_.size() + idx[static_cast<std::size_t>(t)];
        if (!opt_.filter) {
            NetPoint pt{p, std::numeric_limits<double>::quiet_NaN(), true};
            cb(pt, stream_index);
            ++stats.accepted;
            return;
        }
        double best_lb = 0.0;
        const detail::LowerBoundProbe* best_probe = nullptr;
        for (const auto& probe : probes_) {
            double re_pz = 0;
            for (int i = 0; i < m_; ++i) re_pz += std::real(p(i) * probe.z(i));
            double lb = re_pz - probe.lambda;
            if (lb > best_lb || !best_probe) {
                best_lb = lb;
                best_probe = &probe;
            }
            if (lb > threshold_ + 1e-12) return;  // certified reject
        }
        if (dual_ && best_probe) {
            double lb = dual_->lower_bound(p, best_probe->z, best_lb, threshold_ + 1e-12,
                                           opt_.dual_iters);
            if (lb > threshold_ + 1e-12) return;  // certified reject
        }
        MMWOptions mopt;
        mopt.iter_cap = opt_.mmw_iter_cap;
        mopt.point_width_slack = base_.eps_prime;  // disk inflation
        mopt.sharp_alpha = opt_.sharp_mmw;
        DistanceCertificate cert = mmw_distance(p, family_, opt_.eps_mmw, mopt);
        ++stats.oracle_calls;
        if (cert.value <= threshold_) {
            NetPoint pt{p, cert.value, true};
            cb(pt, stream_index);
            ++stats.accepted;
        }
    }

    // Sequential odometer step; returns a yielded point or nullopt.
    std::optional<std::pair<NetPoint, std::int64_t>> step() {
        // advance at current level
        for (;;) {
            if (level_ < 0) {
                done_ = true;
                return std::nullopt;
            }
            int g = ++idx_[static_cast<std::size_t>(level_)];
            if (g >= base_.size()) {
                idx_[static_cast<std::size_t>(level_)] = -1;
                --level_;
                continue;
            }
            if (opt_.filter) {
                double prev = level_ > 0 ? prefix_[static_cast<std::size_t>(level_ - 1)] : 0.0;
                double p = prev + coord_dist_[static_cast<std::size_t>(level_)]
                                             [static_cast<std::size_t>(g)];
                if (p + suffix_min_[static_cast<std::size_t>(level_) + 1] > threshold_ + 1e-12)
                    continue;
                prefix_[static_cast<std::size_t>(level_)] = p;
            }
            if (level_ == m_ - 1) {
                std::optional<std::pair<NetPoint, std::int64_t>> got;
                process_leaf(idx_, scratch_point_,
                             [&](const NetPoint& pt, std::int64_t si) { got = {pt, si}; },
                             stats_);
                if (got) return got;
                continue;  // leaf rejected; keep advancing at leaf level
            }
            ++level_;
            idx_[static_cast<std::size_t>(level_)] = -1;
        }
    }

    ObservableFamily family_;
    QspaceNetOptions opt_;
    int m_;
    DiskNet base_;
    double threshold_ = 0;
    std::vector<std::vector<double>> coord_dist_;
    std::vector<double> coord_min_;
    std::vector<double> suffix_min_;
    std::vector<detail::LowerBoundProbe> probes_;
    std::optional<detail::DualBounder> dual_;
    mutable NetEnumStats stats_;
    // odometer state
    std::vector<int> idx_;
    std::vector<double> prefix_;
    mutable CPoint scratch_point_;
    int level_ = 0;
    bool done_ = false;
};

/// Parallel driver over first-coordinate subtrees. cb may be invoked from
/// worker threads; stream indices allow order-insensitive deterministic
/// reduction. Returns aggregated stats.
inline NetEnumStats enumerate_filtered(const ObservableFamily& f, const QspaceNetOptions& opt,
                                       int threads,
                                       const std::function<void(const NetPoint&, std::int64_t)>& cb) {
    FilteredNet net(f, opt);
    int n0 = net.first_axis_size();
    std::vector<NetEnumStats> partial(static_cast<std::size_t>(n0));
    parallel_blocks(n0, threads, [&](std::int64_t b) {
        net.walk_first(static_cast<int>(b), cb, partial[static_cast<std::size_t>(b)]);
    });
    NetEnumStats total;
    total.raw_total = net.raw_total();
    for (const auto& s : partial) {
        total.leaves_visited += s.leaves_visited;
        total.oracle_calls += s.oracle_calls;
        total.accepted += s.accepted;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Euclidean-ball net over C^m (shared by the Frobenius algorithm and the
// exhaustive oracle).
// ---------------------------------------------------------------------------

struct BallNetOptions {
    bool fix_phase = true;  // keep Re(alpha_0) >= 0 (objective is phase invariant)
    std::int64_t cap = 200000000;
};

/// Cubic grid of spacing eps/sqrt(2m) over the 2m real coordinates,
/// intersected with the ball of radius 1 + eps, then projected onto the unit
/// ball. Projection is nonexpansive, so every ||alpha|| <= 1 keeps a net point
/// within eps (up to global phase when fix_phase is set).
class BallNetStream {
public:
    BallNetStream(int m, double eps, const BallNetOptions& opt = {})
        : m_(m), eps_(eps), opt_(opt) {
        if (m < 1) throw InputError("ball_net: dimension must be >= 1");
        if (eps <= 0) throw InputError("ball_net: resolution must be positive");
        h_ = eps / std::sqrt(2.0 * m);
        radius_ = 1.0 + eps;
        k_ = static_cast<long>(std::floor(radius_ / h_));
        axes_ = 2 * m;
        double per_axis = static_cast<double>(2 * k_ + 1);
        double bound = 1.0;
        for (int a = 0; a < axes_; ++a) bound *= per_axis;
        if (bound > static_cast<double>(opt.cap)) {
            // exact count pass, aborted at the cap
            std::int64_t count = count_capped(opt.cap);
            if (count < 0) {
                double est = std::pow(1.0 + 2.0 / eps, 2.0 * m);
                throw CapExceeded("ball_net: cardinality exceeds cap " +
                                      std::to_string(opt.cap) + " (scale estimate (1+2/eps)^2m = " +
                                      std::to_string(est) + ")",
                                  est, static_cast<double>(opt.cap));
            }
            count_ = count;
        } else {
            std::int64_t count = count_capped(opt.cap);
            if (count < 0) {
                double est = std::pow(1.0 + 2.0 / eps, 2.0 * m);
                throw CapExceeded("ball_net: cardinality exceeds cap " +
                                      std::to_string(opt.cap) + " (scale estimate (1+2/eps)^2m = " +
                                      std::to_string(est) + ")",
                                  est, static_cast<double>(opt.cap));
            }
            count_ = count;
        }
        reset();
    }

    std::int64_t count() const { return count_; }
    double spacing() const { return h_; }

    void reset() {
        ix_.assign(static_cast<std::size_t>(axes_), -k_);
        ix_[0] = opt_.fix_phase ? 0 : -k_;
        sq_.assign(static_cast<std::size_t>(axes_), 0.0);
        level_ = 0;
        ix_[0] -= 1;
        done_ = false;
    }

    std::optional<CVector> next() {
        const double r2 = radius_ * radius_ + 1e-12;
        for (;;) {
            if (level_ < 0) {
                done_ = true;
                return std::nullopt;
            }
            long lo = (level_ == 0 && opt_.fix_phase) ? 0 : -k_;
            if (++ix_[static_cast<std::size_t>(level_)] > k_) {
                ix_[static_cast<std::size_t>(level_)] = lo - 1;
                --level_;
                continue;
            }
            double prev = level_ > 0 ? sq_[static_cast<std::size_t>(level_ - 1)] : 0.0;
            double x = ix_[static_cast<std::size_t>(level_)] * h_;
            double s = prev + x * x;
            if (s > r2) {
                // axes are symmetric: once past the radius on the positive
                // side nothing further on this level can fit
                if (ix_[static_cast<std::size_t>(level_)] > 0) {
                    ix_[static_cast<std::size_t>(level_)] = lo - 1;
                    --level_;
                }
                continue;
            }
            sq_[static_cast<std::size_t>(level_)] = s;
            if (level_ == axes_ - 1) return make_point();
            ++level_;
            long next_lo = (level_ == 0 && opt_.fix_phase) ? 0 : -k_;
            ix_[static_cast<std::size_t>(level_)] = next_lo - 1;
        }
    }

private:
    CVector make_point() const {
        CVector alpha(m_);
        double nrm2 = 0;
        for (int j = 0; j < m_; ++j) {
            double re = ix_[static_cast<std::size_t>(2 * j)] * h_;
            double im = ix_[static_cast<std::size_t>(2 * j + 1)] * h_;
            alpha(j) = Complex(re, im);
            nrm2 += re * re + im * im;
        }
        double nrm = std::sqrt(nrm2);
        if (nrm > 1.0) alpha /= nrm;
        return alpha;
    }

    std::int64_t count_capped(std::int64_t cap) {
        // same walk, counting only
        std::vector<long> ix(static_cast<std::size_t>(axes_));
        std::vector<double> sq(static_cast<std::size_t>(axes_));
        const double r2 = radius_ * radius_ + 1e-12;
        std::int64_t count = 0;
        int level = 0;
        ix[0] = (opt_.fix_phase ? 0 : -k_) - 1;
        for (;;) {
            if (level < 0) return count;
            long lo = (level == 0 && opt_.fix_phase) ? 0 : -k_;
            if (++ix[static_cast<std::size_t>(level)] > k_) {
                ix[static_cast<std::size_t>(level)] = lo - 1;
                --level;
                continue;
            }
            double prev = level > 0 ? sq[static_cast<std::size_t>(level - 1)] : 0.0;
            double x = ix[static_cast<std::size_t>(level)] * h_;
            double s = prev + x * x;
            if (s > r2) {
                if (ix[static_cast<std::size_t>(level)] > 0) {
                    ix[static_cast<std::size_t>(level)] = lo - 1;
                    --level;
                }
                continue;
            }
            sq[static_cast<std::size_t>(level)] = s;
            if (level == axes_ - 1) {
                if (++count > cap) return -1;
                continue;
            }
            ++level;
            long next_lo = (level == 0 && opt_.fix_phase) ? 0 : -k_;
            ix[static_cast<std::size_t>(level)] = next_lo - 1;
        }
    }

    int m_;
    double eps_;
    BallNetOptions opt_;
    double h_ = 0, radius_ = 0;
    long k_ = 0;
    int axes_ = 0;
    std::int64_t count_ = 0;
    std::vector<long> ix_;
    std::vector<double> sq_;
    int level_ = 0;
    bool done_ = false;
};

/// Materialized ball net (small instances / tests).
inline std::vector<CVector> ball_net(int m, double eps, const BallNetOptions& opt = {}) {
    BallNetStream stream(m, eps, opt);
    std::vector<CVector> out;
    out.reserve(static_cast<std::size_t>(stream.count()));
    while (auto p = stream.next()) out.push_back(*p);
    return out;
}

}  // namespace sepopt
