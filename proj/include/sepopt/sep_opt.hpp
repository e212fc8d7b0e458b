#pragma once

#include "sepopt/core.hpp"
#include "sepopt/distance.hpp"
#include "sepopt/nets.hpp"
#include "sepopt/operators.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <optional>

namespace sepopt {

struct Caps {
    std::int64_t raw_net = 10000000000LL;  // product of raw net counts
    std::int64_t disk = 10000000;          // per-coordinate disk net points
    long mmw_iters = 1000000;
    std::int64_t terms = 4096;             // decomposition term count M
    std::int64_t inner_accepted = 20000000;  // materialized inner-party points
};

inline std::int64_t term_cap_from_env(std::int64_t fallback) {
    if (const char* env = std::getenv("SEP_OPT_CAP_TERMS")) {
        char* end = nullptr;
        long long v = std::strtoll(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::int64_t>(v);
    }
    return fallback;
}

/// Netting schedule for the main enumeration: per netted party t, resolution
/// eps_t = w_t delta / ((k-1) W) and an MMW filter error eps_mmw_t. One party
/// is solved spectrally instead of netted.
struct EnumerationPlan {
    int k = 0;
    int m = 0;
    RVector widths;
    double width_product = 0.0;
    double delta = 0.0;
    OptMode mode = OptMode::Max;
    int spectral_party = -1;        // original party index solved by eigenvalue
    std::vector<int> netted;        // original party indices, ascending
    RVector eps_t;                  // indexed like `netted`
    RVector eps_mmw_t;
    bool filter = true;
    int lb_probes = 24;
    Caps caps;
    int threads = 1;
    std::function<void(std::int64_t)> progress;
};

struct PlanOptions {
    double mmw_slack_factor = 0.5;  // eps_mmw_t = factor * eps_t
    // Party solved spectrally; -1 = last party (as in the base algorithm),
    // -2 = auto (net the parties with the smallest widths).
    int spectral_party = -1;
    OptMode mode = OptMode::Max;
    bool filter = true;
    int lb_probes = 24;
    Caps caps;
    int threads = 1;
    std::function<void(std::int64_t)> progress;
};

inline EnumerationPlan make_plan(const DecomposedOperator& d, double delta,
                                 const PlanOptions& opt = {}) {
    if (delta <= 0) throw InputError("plan: delta must be positive");
    if (d.k < 2) throw InputError("plan: k must be >= 2 (use a plain eigensolve for k = 1)");
    EnumerationPlan plan;
    plan.k = d.k;
    plan.m = d.M();
    plan.widths = d.widths;
    plan.width_product = d.width_product();
    plan.delta = delta;
    plan.mode = opt.mode;
    plan.filter = opt.filter;
    plan.lb_probes = opt.lb_probes;
    plan.caps = opt.caps;
    plan.threads = opt.threads;
    plan.progress = opt.progress;
    int spectral = opt.spectral_party;
    if (spectral == -2) {  // net the cheap parties, solve the widest spectrally
        spectral = 0;
        for (int t = 1; t < d.k; ++t)
            if (d.widths(t) > d.widths(spectral)) spectral = t;
    } else if (spectral == -1) {
        spectral = d.k - 1;
    }
    if (spectral < 0 || spectral >= d.k) throw InputError("plan: spectral party out of range");
    plan.spectral_party = spectral;
    for (int t = 0; t < d.k; ++t)
        if (t != spectral) plan.netted.push_back(t);
    plan.eps_t.resize(plan.k - 1);
    plan.eps_mmw_t.resize(plan.k - 1);
    double w_prod = plan.width_product;
    for (std::size_t j = 0; j < plan.netted.size(); ++j) {
        double wt = d.widths(plan.netted[j]);
        plan.eps_t(static_cast<Index>(j)) =
            w_prod > 0 ? wt * delta / ((d.k - 1) * w_prod) : 0.0;
        plan.eps_mmw_t(static_cast<Index>(j)) =
            opt.mmw_slack_factor * plan.eps_t(static_cast<Index>(j));
    }
    return plan;
}

/// Per-party error contributions: the net part eps_t W / w_t telescopes to
/// delta; the filter slack adds 2 eps_mmw_t W / w_t per netted party because
/// accepted points only satisfy dis <= eps_t + 2 eps_mmw_t.
struct ErrorBudget {
    std::vector<double> net_contribution;
    std::vector<double> filter_slack;
    double delta = 0.0;
    double effective_error = 0.0;
};

inline ErrorBudget error_budget(const EnumerationPlan& plan) {
    ErrorBudget b;
    b.delta = 0.0;
    double slack_total = 0.0;
    for (std::size_t j = 0; j < plan.netted.size(); ++j) {
        double wt = plan.widths(plan.netted[j]);
        double ratio = wt > 0 ? plan.width_product / wt : 0.0;
        double net = plan.eps_t(static_cast<Index>(j)) * ratio;
        double slack = plan.filter ? 2.0 * plan.eps_mmw_t(static_cast<Index>(j)) * ratio : 0.0;
        b.net_contribution.push_back(net);
        b.filter_slack.push_back(slack);
        b.delta += net;
        slack_total += slack;
    }
    b.effective_error = b.delta + slack_total;
    return b;
}

/// Q^k = sum_i (prod_t q^t_i) Q^k_i for one net tuple. The caller symmetrizes.
inline CMatrix build_Qk(const DecomposedOperator& d, const std::vector<CPoint>& tuple,
                        int spectral_party) {
    if (static_cast<int>(tuple.size()) != d.k - 1)
        throw InputError("build_Qk: tuple arity must be k-1");
    for (const CPoint& p : tuple)
        if (p.size() != d.M()) throw InputError("build_Qk: point arity must be M");
    Index ds = d.dims[static_cast<std::size_t>(spectral_party)];
    CMatrix out = CMatrix::Zero(ds, ds);
    for (int i = 0; i < d.M(); ++i) {
        Complex coeff(1, 0);
        for (const CPoint& p : tuple) coeff *= p(i);
        if (coeff != Complex(0, 0))
            out += coeff * d.terms[static_cast<std::size_t>(i)]
                              [static_cast<std::size_t>(spectral_party)];
    }
    return out;
}

inline CMatrix build_Qk(const DecomposedOperator& d, const std::vector<CPoint>& tuple) {
    return build_Qk(d, tuple, d.k - 1);
}

struct WitnessInfo {
    std::vector<CPoint> tuple;            // netted points, in `netted` order
    std::vector<std::int64_t> indices;    // raw stream index per netted party
    CVector spectral_vector;              // extremal eigenvector of symm(Q^k)
    double eigenvalue = 0.0;
};

struct RunStats {
    double raw_total = 0.0;
    std::int64_t leaves_visited = 0;
    std::int64_t oracle_calls = 0;
    std::int64_t accepted = 0;
    std::int64_t tuples_evaluated = 0;
    double wall_ms = 0.0;
};

struct NetParams {  // per netted party, echoed into reports
    int party = 0;
    double eps = 0.0;
    double eps_mmw = 0.0;
    int disk_points = 0;
    double raw_count = 0.0;
    std::int64_t accepted = 0;
};

struct OptimizationReport {
    std::string algorithm;
    OptMode mode = OptMode::Max;
    double opt_value = 0.0;
    double effective_error = 0.0;
    bool sound = true;
    WitnessInfo witness;
    ErrorBudget budget;
    RunStats stats;
    std::vector<NetParams> net_params;
    double delta = 0.0;
    int spectral_party = 0;
};

namespace detail {

// Candidate set for deterministic tie-breaking: values within 1e-9 of the
// local best, with their tuple stream indices.
struct BestTracker {
    double best = -1e300;
    std::vector<std::pair<double, std::int64_t>> near;  // (value, index)

    void offer(double value, std::int64_t index) {
        if (value > best + 1e-9) {
            best = value;
            near.clear();
            near.emplace_back(value, index);
        } else if (value >= best - 1e-9) {
            best = std::max(best, value);
            near.emplace_back(value, index);
            if (near.size() > 4096) prune();
        }
    }

    void prune() {
        std::vector<std::pair<double, std::int64_t>> keep;
        for (auto& c : near)
            if (c.first >= best - 1e-9) keep.push_back(c);
        near.swap(keep);
    }

    void merge(const BestTracker& other) {
        for (auto& c : other.near) offer(c.first, c.second);
        best = std::max(best, other.best);
    }

    std::int64_t winner_index() const {
        std::int64_t idx = -1;
        for (auto& c : near)
            if (c.first >= best - 1e-12 && (idx < 0 || c.second < idx)) idx = c.second;
        return idx;
    }
};

inline double worst_case_count_estimate(const EnumerationPlan& plan) {
    double base = (plan.k - 1.0) * (plan.k - 1.0) * plan.width_product * plan.width_product *
                  plan.m * plan.m / (plan.delta * plan.delta);
    return std::pow(base, (plan.k - 1.0) * plan.m);
}

}  // namespace detail

/// The main algorithm: enumerate the product of filtered nets over the netted
/// parties, build the spectral party's operator for each tuple, symmetrize,
/// take the extreme eigenvalue, and return the extremum with the additive
/// error guarantee OPT - effective_error <= OptSep(Q) <= OPT + effective_error.
inline OptimizationReport optimize_decomposed(const DecomposedOperator& d,
                                              const EnumerationPlan& plan) {
    validate_decomposed(d);
    if (d.M() > plan.caps.terms)
        throw CapExceeded("optimize_decomposed: M = " + std::to_string(d.M()) +
                              " exceeds the term cap",
                          static_cast<double>(d.M()), static_cast<double>(plan.caps.terms));

    auto t_start = std::chrono::steady_clock::now();
    OptimizationReport rep;
    rep.algorithm = "decomposed";
    rep.mode = plan.mode;
    rep.delta = plan.delta;
    rep.spectral_party = plan.spectral_party;
    rep.budget = error_budget(plan);
    rep.effective_error = rep.budget.effective_error;
    rep.sound = plan.filter;

    // Degenerate inputs: no terms, or a party with width 0 (all its factors
    // vanish), make Q = 0.
    bool zero = d.M() == 0;
    for (int t = 0; t < d.k && !zero; ++t)
        if (plan.widths(t) == 0.0) zero = true;
    if (zero) {
        rep.opt_value = 0.0;
        rep.witness.eigenvalue = 0.0;
        Index ds = d.dims[static_cast<std::size_t>(plan.spectral_party)];
        rep.witness.spectral_vector = CVector::Unit(ds, 0);
        return rep;
    }

    // Per-party filtered nets.
    std::vector<ObservableFamily> families;
    std::vector<QspaceNetOptions> net_opts;
    std::vector<std::unique_ptr<FilteredNet>> nets;
    double raw_product = 1.0;
    for (std::size_t j = 0; j < plan.netted.size(); ++j) {
        int t = plan.netted[j];
        ObservableFamily f;
        f.w = plan.widths(t);
        for (int i = 0; i < d.M(); ++i)
            f.ops.push_back(d.terms[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]);
        QspaceNetOptions nopt;
        nopt.eps = plan.eps_t(static_cast<Index>(j));
        nopt.eps_mmw = plan.eps_mmw_t(static_cast<Index>(j));
        nopt.filter = plan.filter;
        nopt.disk_cap = plan.caps.disk;
        nopt.raw_cap = plan.caps.raw_net;
        nopt.mmw_iter_cap = plan.caps.mmw_iters;
        nopt.lb_probes = plan.lb_probes;
        nopt.progress = plan.progress;
        families.push_back(std::move(f));
        net_opts.push_back(std::move(nopt));
        nets.push_back(std::make_unique<FilteredNet>(families.back(), net_opts.back()));
        raw_product *= nets.back()->raw_total();
    }
    if (raw_product > static_cast<double>(plan.caps.raw_net))
        throw CapExceeded("optimize_decomposed: raw tuple count " + std::to_string(raw_product) +
                              " exceeds cap (worst-case net-size estimate " +
                              std::to_string(detail::worst_case_count_estimate(plan)) + ")",
                          raw_product, static_cast<double>(plan.caps.raw_net));
    rep.stats.raw_total = raw_product;

    // Inner parties (all but the first netted one) are materialized; the outer
    // one is streamed and parallelized over its first grid axis.
    struct InnerPoint {
        CPoint coords;
        std::int64_t index;
    };
    std::vector<std::vector<InnerPoint>> inner(plan.netted.size() > 1 ? plan.netted.size() - 1
                                                                      : 0);
    for (std::size_t j = 1; j < plan.netted.size(); ++j) {
        FilteredNet& net = *nets[j];
        while (auto got = net.next()) {
            inner[j - 1].push_back({got->first.coords, got->second});
            if (static_cast<std::int64_t>(inner[j - 1].size()) > plan.caps.inner_accepted)
                throw CapExceeded("optimize_decomposed: inner party accepted points exceed cap",
                                  static_cast<double>(inner[j - 1].size()),
                                  static_cast<double>(plan.caps.inner_accepted));
        }
        NetParams np;
        np.party = plan.netted[j];
        np.eps = net_opts[j].eps;
        np.eps_mmw = net_opts[j].eps_mmw;
        np.disk_points = net.base().size();
        np.raw_count = net.raw_total();
        np.accepted = net.stats().accepted;
        rep.net_params.push_back(np);
        rep.stats.leaves_visited += net.stats().leaves_visited;
        rep.stats.oracle_calls += net.stats().oracle_calls;
        rep.stats.accepted += net.stats().accepted;
    }

    const double sign = (plan.mode == OptMode::Max) ? 1.0 : -1.0;
    const OptMode eig_mode = plan.mode;
    const FilteredNet& outer = *nets[0];
    const int n0 = outer.first_axis_size();

    // Stream index of a full tuple: outer raw index most significant, then the
    // inner parties' raw indices in netted order.
    std::vector<double> radix(plan.netted.size(), 1.0);
    for (std::size_t j = plan.netted.size(); j-- > 1;)
        radix[j - 1] = radix[j] * nets[j]->raw_total();

    struct Local {
        detail::BestTracker tracker;
        NetEnumStats net_stats;
        std::int64_t evaluated = 0;
        std::vector<CPoint> tuple;
        std::vector<std::int64_t> indices;
    };
    std::vector<Local> locals(static_cast<std::size_t>(n0));

    // Allocation-free eigenvalue path for 2x2 spectral parties (the common
    // qubit case; evaluated once per accepted tuple).
    const Index ds = d.dims[static_cast<std::size_t>(plan.spectral_party)];
    struct Flat2 {
        double r00, i00, r11, i11, r01, i01, r10, i10;
    };
    std::vector<Flat2> flat2;
    if (ds == 2) {
        for (int i = 0; i < d.M(); ++i) {
            const CMatrix& a =
                d.terms[static_cast<std::size_t>(i)][static_cast<std::size_t>(plan.spectral_party)];
            flat2.push_back({std::real(a(0, 0)), std::imag(a(0, 0)), std::real(a(1, 1)),
                             std::imag(a(1, 1)), std::real(a(0, 1)), std::imag(a(0, 1)),
                             std::real(a(1, 0)), std::imag(a(1, 0))});
        }
    }

    auto eval_tuple = [&](Local& loc) {
        double value;
        if (ds == 2) {
            double h00 = 0, h11 = 0, hor = 0, hoi = 0;
            for (int i = 0; i < d.M(); ++i) {
                double cr = 1.0, ci = 0.0;
                for (const CPoint& pt : loc.tuple) {
                    double qr = std::real(pt(i)), qi = std::imag(pt(i));
                    double nr = cr * qr - ci * qi;
                    ci = cr * qi + ci * qr;
                    cr = nr;
                }
                const Flat2& a = flat2[static_cast<std::size_t>(i)];
                // Herm(c A): diagonal Re(c a_jj); off-diagonal (c a01 + conj(c a10))/2
                h00 += cr * a.r00 - ci * a.i00;
                h11 += cr * a.r11 - ci * a.i11;
                double t01r = cr * a.r01 - ci * a.i01, t01i = cr * a.i01 + ci * a.r01;
                double t10r = cr * a.r10 - ci * a.i10, t10i = cr * a.i10 + ci * a.r10;
                hor += 0.5 * (t01r + t10r);
                hoi += 0.5 * (t01i - t10i);
            }
            double mid = 0.5 * (h00 + h11), del = 0.5 * (h00 - h11);
            double s = std::sqrt(del * del + hor * hor + hoi * hoi);
            value = (eig_mode == OptMode::Max) ? mid + s : mid - s;
        } else {
            CMatrix qk = build_Qk(d, loc.tuple, plan.spectral_party);
            value = extreme_eigenvalue(symmetrize(qk), eig_mode).value;
        }
        double tuple_index_f = 0;  // mixed radix; doubles are exact below 2^53
        for (std::size_t j = 0; j < plan.netted.size(); ++j)
            tuple_index_f =
                tuple_index_f + static_cast<double>(loc.indices[j]) * radix[j];
        loc.tracker.offer(sign * value, static_cast<std::int64_t>(tuple_index_f));
        ++loc.evaluated;
    };

    std::function<void(Local&, std::size_t)> recurse = [&](Local& loc, std::size_t j) {
        if (j == plan.netted.size()) {
            eval_tuple(loc);
            return;
        }
        for (const InnerPoint& ip : inner[j - 1]) {
            loc.tuple[j] = ip.coords;
            loc.indices[j] = ip.index;
            recurse(loc, j + 1);
        }
    };

    parallel_blocks(n0, plan.threads, [&](std::int64_t b) {
        Local& loc = locals[static_cast<std::size_t>(b)];
        loc.tuple.resize(plan.netted.size());
        loc.indices.resize(plan.netted.size());
        outer.walk_first(static_cast<int>(b),
                         [&](const NetPoint& pt, std::int64_t si) {
                             loc.tuple[0] = pt.coords;
                             loc.indices[0] = si;
                             recurse(loc, 1);
                         },
                         loc.net_stats);
    });

    detail::BestTracker total;
    NetEnumStats outer_stats;
    std::int64_t evaluated = 0;
    for (const Local& loc : locals) {
        total.merge(loc.tracker);
        outer_stats.leaves_visited += loc.net_stats.leaves_visited;
        outer_stats.oracle_calls += loc.net_stats.oracle_calls;
        outer_stats.accepted += loc.net_stats.accepted;
        evaluated += loc.evaluated;
    }
    {
        NetParams np;
        np.party = plan.netted[0];
        np.eps = net_opts[0].eps;
        np.eps_mmw = net_opts[0].eps_mmw;
        np.disk_points = outer.base().size();
        np.raw_count = outer.raw_total();
        np.accepted = outer_stats.accepted;
        rep.net_params.insert(rep.net_params.begin(), np);
    }
    rep.stats.leaves_visited += outer_stats.leaves_visited;
    rep.stats.oracle_calls += outer_stats.oracle_calls;
    rep.stats.accepted += outer_stats.accepted;
    rep.stats.tuples_evaluated = evaluated;

    if (evaluated == 0)
        throw NumericalError(
            "optimize_decomposed: no net tuple survived filtering (this contradicts net "
            "coverage; check caps)");

    std::int64_t winner = total.winner_index();
    rep.opt_value = sign * total.best;

    // Reconstruct the winning tuple from its stream index.
    {
        double rem = static_cast<double>(winner);
        std::vector<std::int64_t> idx(plan.netted.size());
        for (std::size_t j = 0; j < plan.netted.size(); ++j) {
            idx[j] = static_cast<std::int64_t>(std::floor(rem / radix[j] + 0.5e-9));
            rem -= static_cast<double>(idx[j]) * radix[j];
        }
        rep.witness.indices = idx;
        rep.witness.tuple.resize(plan.netted.size());
        for (std::size_t j = 0; j < plan.netted.size(); ++j) {
            const DiskNet& base = nets[j]->base();
            CPoint p(d.M());
            std::int64_t rest = idx[j];
            std::vector<int> digits(static_cast<std::size_t>(d.M()));
            for (int i = d.M(); i-- > 0;) {
                digits[static_cast<std::size_t>(i)] = static_cast<int>(rest % base.size());
                rest /= base.size();
            }
            for (int i = 0; i < d.M(); ++i)
                p(i) = base.points[static_cast<std::size_t>(digits[static_cast<std::size_t>(i)])];
            rep.witness.tuple[j] = p;
        }
        HermitianOperator sym = symmetrize(build_Qk(d, rep.witness.tuple, plan.spectral_party));
        Eigenpair pair = extreme_eigenvalue(sym, eig_mode);
        rep.witness.spectral_vector = pair.vector;
        rep.witness.eigenvalue = pair.value;
        if (std::abs(pair.value - rep.opt_value) > 1e-9)
            throw NumericalError("optimize_decomposed: winner reconstruction mismatch");
    }

    rep.stats.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t_start)
                            .count();
    return rep;
}

inline OptimizationReport optimize_decomposed(const DecomposedOperator& d, double delta,
                                              const PlanOptions& opt = {}) {
    return optimize_decomposed(d, make_plan(d, delta, opt));
}

}  // namespace sepopt
