// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. SEPOPT_CI=1 (or --ci) runs the reduced schedule: criterion 1 at
// eps = 0.1 and criterion 3 on instances (a),(b) only, with the cross-check
// in criterion 7 narrowed accordingly.

#include "sepopt/sepopt.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <sstream>

using namespace sepopt;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }

    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

struct Harness {
    bool ci = false;
    int failures = 0;
    std::optional<OptimizationReport> phi_plus_decomposed;  // criterion 3(c) -> 7

    void run(int index, const std::string& name, const std::function<void(Outcome&)>& body) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            body(out);
        } catch (const std::exception& e) {
            out.fail(std::string("exception: ") + e.what());
        }
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s (%s) [%.1f s]\n", out.pass ? "PASS" : "FAIL", index,
                    name.c_str(), out.detail.empty() ? "ok" : out.detail.c_str(), sec);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
};

CMatrix random_matrix(SplitMix64& rng, Index d) {
    CMatrix m(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) m(i, j) = 0.5 * rng.cgaussian();
    return m;
}

CMatrix random_hermitian_unit(SplitMix64& rng, Index d) {
    CMatrix h = random_matrix(rng, d);
    h = 0.5 * (h + h.adjoint()).eval();
    double n = operator_norm(h);
    if (n < 1e-12) return CMatrix::Identity(d, d);
    return h / n;
}

CVector random_unit(SplitMix64& rng, Index d) {
    CVector v(d);
    for (Index i = 0; i < d; ++i) v(i) = rng.cgaussian();
    return v / v.norm();
}

Complex random_disk(SplitMix64& rng, double radius) {
    double r = radius * std::sqrt(rng.uniform());
    double th = 6.283185307179586 * rng.uniform();
    return r * Complex(std::cos(th), std::sin(th));
}

CMatrix random_density(SplitMix64& rng, Index d) {
    CMatrix a = random_matrix(rng, d);
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace();
}

CMatrix random_unitary2(SplitMix64& rng) {
    Eigen::HouseholderQR<CMatrix> qr(random_matrix(rng, 2));
    return CMatrix(qr.householderQ());
}

CVector bell_vector() {
    CVector v(4);
    v << 1, 0, 0, 1;
    return v / std::sqrt(2.0);
}

DecomposedOperator phi_plus_decomposition() {
    DecomposedOperator d;
    d.k = 2;
    d.dims = {2, 2};
    d.widths = RVector::Constant(2, 0.5);
    double sign[4] = {1, 1, -1, 1};
    for (int j = 0; j < 4; ++j)
        d.terms.push_back(
            {CMatrix(0.5 * pauli::by_index(j)), CMatrix(sign[j] * 0.5 * pauli::by_index(j))});
    return d;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

// --------------------------------------------------------------------------
// Criterion 1: MMW distance vs the certified exhaustive reference.
// --------------------------------------------------------------------------
void criterion_mmw(Outcome& out, bool ci) {
    const double eps = ci ? 0.1 : 0.05;
    const double tol = eps + 0.02;
    SplitMix64 rng(1001);
    double max_dev = 0, max_gap = 0;
    for (int i = 0; i < 30; ++i) {
        Index d = 2 + (i % 3);
        int m = 1 + (i / 3) % 2;
        ObservableFamily f;
        f.w = 1.0;
        for (int q = 0; q < m; ++q) f.ops.push_back(random_hermitian_unit(rng, d));
        CPoint p(m);
        for (int q = 0; q < m; ++q) p(q) = random_disk(rng, 1.0);

        DistanceCertificate mmw = mmw_distance(p, f, eps);
        double grid = d == 2 ? 0.25 : (d == 3 ? 0.4 : 0.5);
        ExactDistanceOptions eopt;
        eopt.polish_iters = 6000;
        eopt.gap_tol = 1e-5;
        ExactDistanceResult oracle = exact_distance_small_full(p, f, grid, eopt);
        max_gap = std::max(max_gap, oracle.gap);
        double dev = std::abs(mmw.value - oracle.value);
        max_dev = std::max(max_dev, dev);
        if (oracle.gap > 0.02)
            out.fail("oracle gap " + fmt(oracle.gap) + " too large on instance " +
                     std::to_string(i));
        if (dev > tol)
            out.fail("instance " + std::to_string(i) + ": |mmw - exact| = " + fmt(dev) + " > " +
                     fmt(tol));
        if (mmw.value < oracle.value - oracle.gap - 1e-9)
            out.fail("instance " + std::to_string(i) + ": estimate below the true distance");
    }
    out.note("30/30 instances, eps = " + fmt(eps) + ", max |mmw - exact| = " + fmt(max_dev) +
             ", max oracle gap = " + fmt(max_gap));
}

// --------------------------------------------------------------------------
// Criterion 2: eps-net coverage and soundness for F = {Z, X}, eps = 0.2.
// --------------------------------------------------------------------------
void criterion_net(Outcome& out) {
    ObservableFamily f;
    f.ops = {pauli::Z(), pauli::X()};
    f.w = 1.0;
    QspaceNetOptions opt;
    opt.eps = 0.2;
    opt.eps_mmw = 0.1;
    FilteredNet net(f, opt);
    std::vector<CPoint> accepted;
    std::vector<double> estimates;
    while (auto got = net.next()) {
        accepted.push_back(got->first.coords);
        estimates.push_back(got->first.dis_estimate);
    }
    if (accepted.empty()) {
        out.fail("no accepted points");
        return;
    }

    SplitMix64 rng(2002);
    int covered = 0;
    for (int rep = 0; rep < 200; ++rep) {
        CPoint q = q_vector_unchecked(f, random_density(rng, 2));
        double best = 1e300;
        for (const CPoint& a : accepted)
            best = std::min(best, std::abs(q(0) - a(0)) + std::abs(q(1) - a(1)));
        if (best <= 0.2 + 1e-9) ++covered;
    }
    if (covered != 200) out.fail(std::to_string(200 - covered) + "/200 states uncovered");

    // soundness: every accepted point is within eps + 2 eps_mmw of S(Q); the
    // exhaustive value upper-bounds the true distance, so value <= 0.4 certifies
    ExactDistanceOptions eopt;
    eopt.polish_iters = 800;
    eopt.gap_tol = 1e-4;
    ExactDistanceOptions hard;  // escalation near the certification boundary
    hard.polish_iters = 20000;
    hard.gap_tol = 1e-8;
    double worst = 0;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        double dis_ub = exact_distance_small_full(accepted[i], f, 0.3, eopt).value;
        if (dis_ub > 0.37) dis_ub = exact_distance_small_full(accepted[i], f, 0.2, hard).value;
        worst = std::max(worst, dis_ub);
        if (dis_ub > 0.2 + 2 * 0.1 + 1e-6) {
            out.fail("accepted point " + std::to_string(i) + " has dis upper bound " +
                     fmt(dis_ub) + " > 0.4");
            break;
        }
        if (estimates[i] > 0.2 + 0.1 + 1e-12) {
            out.fail("accepted point carries estimate above the filter threshold");
            break;
        }
    }
    out.note(std::to_string(accepted.size()) + " accepted points, coverage 200/200, max dis <= " +
             fmt(worst) + ", oracle calls " + std::to_string(net.stats().oracle_calls));
}

// --------------------------------------------------------------------------
// Criterion 3: the main-algorithm sandwich on (a), (b), and (c).
// --------------------------------------------------------------------------
void criterion_sandwich(Outcome& out, Harness& h) {
    auto check_instance = [&](const char* tag, const DecomposedOperator& d, double delta,
                              double truth) -> std::optional<OptimizationReport> {
        HermitianOperator q = reconstruct(d);
        OracleResult sw = seesaw(q, d.dims[0], d.dims[1], OptMode::Max);
        OracleResult ex = exhaustive_product_net(q, d.dims[0], d.dims[1], 0.2, OptMode::Max);
        double oracle = std::max(sw.value, ex.value);
        if (std::abs(oracle - truth) > 0.02) {
            out.fail(std::string(tag) + ": oracle value " + fmt(oracle) +
                     " disagrees with the analytic value " + fmt(truth));
            return std::nullopt;
        }
        try {
            OptimizationReport rep = optimize_decomposed(d, delta);
            if (std::abs(rep.opt_value - oracle) > rep.effective_error + 1e-9)
                out.fail(std::string(tag) + ": |OPT - " + fmt(oracle) + "| = " +
                         fmt(std::abs(rep.opt_value - oracle)) + " > effective error " +
                         fmt(rep.effective_error));
            out.note(std::string(tag) + ": OPT = " + fmt(rep.opt_value) + " +/- " +
                     fmt(rep.effective_error));
            return rep;
        } catch (const CapExceeded& e) {
            out.fail(std::string(tag) + ": cap exceeded (" + e.what() + ")");
            return std::nullopt;
        }
    };

    DecomposedOperator ii;
    ii.k = 2;
    ii.dims = {2, 2};
    ii.widths = RVector::Ones(2);
    ii.terms = {{CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)}};
    check_instance("(a) identity", ii, 0.25, 1.0);

    DecomposedOperator zz;
    zz.k = 2;
    zz.dims = {2, 2};
    zz.widths = RVector::Ones(2);
    zz.terms = {{pauli::Z(), pauli::Z()}};
    check_instance("(b) ZZ", zz, 0.25, 1.0);

    if (h.ci) {
        out.note("(c) skipped in CI mode");
        return;
    }
    h.phi_plus_decomposed = check_instance("(c) Phi+ Pauli, M=4", phi_plus_decomposition(), 0.25,
                                           0.5);
}

// --------------------------------------------------------------------------
// Criterion 4: the Frobenius algorithm and its continuum identity.
// --------------------------------------------------------------------------
void criterion_frobenius(Outcome& out) {
    HermitianOperator bell = validate_hermitian(CMatrix(bell_vector() * bell_vector().adjoint()));
    FrobeniusReport rb = optimize_frobenius(bell, 2, 2, 0.4);
    if (std::abs(rb.base.opt_value - 0.5) > 0.4 + 1e-12)
        out.fail("Phi+ projector: OPT " + fmt(rb.base.opt_value) + " not within 0.4 of 0.5");

    CMatrix zerozero = CMatrix::Zero(4, 4);
    zerozero(0, 0) = 1;
    FrobeniusReport rp = optimize_frobenius(validate_hermitian(zerozero), 2, 2, 0.4);
    if (std::abs(rp.base.opt_value - 1.0) > 0.4 + 1e-12)
        out.fail("|00><00|: OPT " + fmt(rp.base.opt_value) + " not within 0.4 of 1");

    SplitMix64 rng(4004);
    int checked = 0;
    double worst = 0;
    while (checked < 50) {
        CMatrix a = random_matrix(rng, 4);
        CMatrix q = a * a.adjoint();
        q /= std::real(q.trace()) / 1.5;
        SpectralTruncation t = truncate_spectrum(validate_hermitian(q, 1e-8), 0.3);
        if (t.gamma_size() == 0) continue;
        CVector u = random_unit(rng, 2), v = random_unit(rng, 2);
        CVector uv = kron(CMatrix(u), CMatrix(v));
        CVector gamma(t.gamma_size());
        double qtilde_uv = 0;
        for (int j = 0; j < t.gamma_size(); ++j) {
            double lam = t.eigenvalues(t.kept[static_cast<std::size_t>(j)]);
            Complex overlap = uv.dot(t.eigenvectors.col(t.kept[static_cast<std::size_t>(j)]));
            gamma(j) = std::sqrt(lam) * overlap;
            qtilde_uv += lam * std::norm(overlap);
        }
        if (gamma.norm() < 1e-6) continue;
        Complex attained = uv.dot(phi_alpha(t, CVector(gamma / gamma.norm())));
        double dev = std::abs(std::norm(attained) - qtilde_uv);
        worst = std::max(worst, dev);
        if (dev > 1e-9) out.fail("continuum identity off by " + fmt(dev));
        ++checked;
    }
    out.note("OPT(Phi+) = " + fmt(rb.base.opt_value) + ", OPT(|00>) = " + fmt(rp.base.opt_value) +
             ", identity max dev = " + fmt(worst) + " over 50 draws");
}

// --------------------------------------------------------------------------
// Criterion 5: circuit decomposition vs dense simulation.
// --------------------------------------------------------------------------
void criterion_circuit(Outcome& out) {
    SplitMix64 rng(5005);
    auto random_circuit = [&](int max_qubits, int max_cross) {
        VerifierCircuit c;
        for (;;) {
            c.m1 = 1 + static_cast<int>(rng.next() % 3);
            c.m2 = 1 + static_cast<int>(rng.next() % 3);
            c.v = 1 + static_cast<int>(rng.next() % 3);
            if (c.total_qubits() <= max_qubits) break;
        }
        int gates = 4 + static_cast<int>(rng.next() % 12);
        int cross_used = 0;
        for (int g = 0; g < gates; ++g) {
            bool placed = false;
            if (rng.uniform() >= 0.55) {
                // a same-space pair may not exist (all spaces can be single
                // qubits), so bound the rejection sampling
                for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
                    CnotGate cx;
                    cx.c = static_cast<int>(rng.next() % c.total_qubits());
                    cx.t = static_cast<int>(rng.next() % c.total_qubits());
                    if (cx.c == cx.t) continue;
                    bool cross = space_of(c, cx.c) != space_of(c, cx.t);
                    if (cross && cross_used >= max_cross) continue;
                    if (cross) ++cross_used;
                    c.gates.push_back(cx);
                    placed = true;
                }
            }
            if (!placed) {
                SingleQubitGate sq;
                sq.q = static_cast<int>(rng.next() % c.total_qubits());
                sq.u = random_unitary2(rng);
                c.gates.push_back(sq);
            }
        }
        return c;
    };

    double worst_recon = 0;
    for (int rep = 0; rep < 50; ++rep) {
        VerifierCircuit c = random_circuit(8, 3);
        HermitianOperator direct = povm_direct(c);
        PropagatedPOVM prop = backward_propagate(c);
        DecomposedOperator d = prop.to_decomposed();

        double recon = (reconstruct_dense(d) - direct.entries).cwiseAbs().maxCoeff();
        worst_recon = std::max(worst_recon, recon);
        if (recon > 1e-9)
            out.fail("circuit " + std::to_string(rep) + ": reconstruction off by " + fmt(recon));

        std::int64_t cross = 0;
        for (GateType t : classify_gates(c))
            if (t == GateType::TypeII) ++cross;
        if (static_cast<double>(prop.terms.size()) > std::pow(4.0, cross) + 0.5)
            out.fail("circuit " + std::to_string(rep) + ": term count law violated");
        if (d.widths.maxCoeff() > 1.0 + 1e-9)
            out.fail("circuit " + std::to_string(rep) + ": factor norm " +
                     fmt(d.widths.maxCoeff()) + " > 1");

        Eigen::SelfAdjointEigenSolver<CMatrix> es(direct.entries);
        if (es.eigenvalues().minCoeff() < -1e-9 || es.eigenvalues().maxCoeff() > 1.0 + 1e-9)
            out.fail("circuit " + std::to_string(rep) + ": POVM spectrum outside [0,1]");
    }
    out.note("50 circuits, worst reconstruction deviation = " + fmt(worst_recon));
}

// --------------------------------------------------------------------------
// Criterion 6: local Hamiltonian pipeline.
// --------------------------------------------------------------------------
void criterion_local_ham(Outcome& out) {
    SplitMix64 rng(6006);
    int verdict_checks = 0, verdict_matches = 0;
    double worst_recon = 0;

    for (int inst = 0; inst < 100; ++inst) {
        LocalHamiltonian h;
        h.k = 2;
        h.n = (inst % 5 == 4) ? 2 : 1;  // 80 single-qubit parties, 20 two-qubit
        // dense cross-party terms blow the tuple count up to 16 per term; such
        // instances check decomposition/reconstruction only, since the tuple
        // net is |T|^M and M > 4 is unenumerable at any delta
        bool heavy = inst % 10 == 7;
        bool diag_cross = !heavy && h.n == 1 && inst % 16 == 3;  // single M=4 term
        int r = (heavy || diag_cross) ? 1 : 1 + static_cast<int>(rng.next() % 2);

        for (int i = 0; i < r; ++i) {
            LocalTerm t;
            if (heavy && i == 0) {
                t.matrix = random_hermitian_unit(rng, 4);
                t.support = {{0, static_cast<int>(rng.next() % h.n)},
                             {1, static_cast<int>(rng.next() % h.n)}};
            } else if (diag_cross && i == 0) {
                // projector onto a random basis product state: 4 Pauli tuples
                CMatrix pa = CMatrix::Zero(2, 2), pb = CMatrix::Zero(2, 2);
                Index ba = static_cast<Index>(rng.next() % 2);
                Index bb = static_cast<Index>(rng.next() % 2);
                pa(ba, ba) = 1;
                pb(bb, bb) = 1;
                t.matrix = (0.4 + 0.6 * rng.uniform()) * kron(pa, pb);
                t.support = {{0, 0}, {1, 0}};
            } else {
                int kind = static_cast<int>(rng.next() % 3);
                if (kind == 1 && h.n == 2) {  // dense two-qubit term inside one party
                    t.matrix = random_hermitian_unit(rng, 4);
                    int party = static_cast<int>(rng.next() % 2);
                    t.support = {{party, 0}, {party, 1}};
                } else if (kind == 2) {  // cross-party Pauli product: one tuple
                    int pa = 1 + static_cast<int>(rng.next() % 3);
                    int pb = 1 + static_cast<int>(rng.next() % 3);
                    double c = rng.uniform(-1.0, 1.0);
                    t.matrix = c * kron(pauli::by_index(pa), pauli::by_index(pb));
                    t.support = {{0, static_cast<int>(rng.next() % h.n)},
                                 {1, static_cast<int>(rng.next() % h.n)}};
                } else {  // single-qubit term
                    t.matrix = random_hermitian_unit(rng, 2);
                    t.support = {{static_cast<int>(rng.next() % 2),
                                  static_cast<int>(rng.next() % h.n)}};
                }
            }
            h.terms.push_back(std::move(t));
        }

        DecomposedOperator d = decompose_hamiltonian(h);
        double recon =
            (reconstruct_dense(d) - local_hamiltonian_dense(h)).cwiseAbs().maxCoeff();
        worst_recon = std::max(worst_recon, recon);
        if (recon > 1e-9) {
            out.fail("instance " + std::to_string(inst) + ": reconstruction off by " + fmt(recon));
            continue;
        }
        if (d.M() > 16 * r) {
            out.fail("instance " + std::to_string(inst) + ": M = " + std::to_string(d.M()) +
                     " > 16 r");
            continue;
        }
        if (heavy) continue;

        double delta = diag_cross ? 0.8 : (h.n == 1 ? 0.4 : 0.7);
        HermitianOperator dense = validate_hermitian(local_hamiltonian_dense(h), 1e-8);
        Index pd = Index(1) << h.n;
        double oracle;
        if (h.n == 1) {
            OracleResult ex = exhaustive_product_net(dense, pd, pd, 0.1, OptMode::Min);
            OracleResult sw = seesaw(dense, pd, pd, OptMode::Min);
            oracle = std::min(ex.value, sw.value);
        } else {
            // two-qubit parties exceed the exhaustive oracle's dimension bound
            oracle = seesaw(dense, pd, pd, OptMode::Min).value;
        }

        double eff = 2.0 * delta;
        double gap = 2.5 * eff;
        bool expect_low = inst % 2 == 0;
        if (expect_low) {
            h.b = oracle + 0.1;
            h.a = *h.b + gap;
        } else {
            h.a = oracle - 0.1;
            h.b = *h.a - gap;
        }
        PromiseResult res = solve_promise(h, delta);
        if (res.report.effective_error >= 0.5 * gap) {
            out.fail("instance " + std::to_string(inst) + ": unexpected INCONCLUSIVE band");
            continue;
        }
        ++verdict_checks;
        PromiseVerdict expected = oracle >= res.midpoint ? PromiseVerdict::High
                                                         : PromiseVerdict::Low;
        if (res.verdict == expected) {
            ++verdict_matches;
        } else {
            out.fail("instance " + std::to_string(inst) + ": verdict " +
                     to_string(res.verdict) + " vs oracle side " + to_string(expected));
        }
        if (std::abs(res.report.opt_value - oracle) > res.report.effective_error + 0.05)
            out.fail("instance " + std::to_string(inst) + ": OPT " + fmt(res.report.opt_value) +
                     " vs oracle " + fmt(oracle) + " outside the error bar");
    }
    out.note("100 reconstructions (worst dev " + fmt(worst_recon) + "), " +
             std::to_string(verdict_matches) + "/" + std::to_string(verdict_checks) +
             " verdicts match");
}

// --------------------------------------------------------------------------
// Criterion 7: cross-algorithm agreement.
// --------------------------------------------------------------------------
void criterion_agreement(Outcome& out, Harness& h) {
    HermitianOperator bell = validate_hermitian(CMatrix(bell_vector() * bell_vector().adjoint()));
    FrobeniusReport fb = optimize_frobenius(bell, 2, 2, 0.4);
    OracleResult sw_bell = seesaw(bell, 2, 2, OptMode::Max);
    if (!(sw_bell.value >= fb.base.opt_value - fb.base.effective_error - 1e-9 &&
          sw_bell.value <= fb.base.opt_value + fb.base.effective_error + 1e-9))
        out.fail("Phi+: frobenius does not bracket see-saw");
    if (h.phi_plus_decomposed) {
        const OptimizationReport& dec = *h.phi_plus_decomposed;
        if (std::abs(fb.base.opt_value - dec.opt_value) >
            fb.base.effective_error + dec.effective_error + 1e-9)
            out.fail("Phi+: |frobenius - decomposed| exceeds the summed error bars");
        if (!(sw_bell.value >= dec.opt_value - dec.effective_error - 1e-9 &&
              sw_bell.value <= dec.opt_value + dec.effective_error + 1e-9))
            out.fail("Phi+: decomposed does not bracket see-saw");
        out.note("Phi+ frobenius " + fmt(fb.base.opt_value) + " vs decomposed " +
                 fmt(dec.opt_value));
    } else {
        out.note("Phi+ decomposed comparison skipped (CI)");
    }

    // random rank-2 PSD on 2x2 with trace <= 2, decomposable with M = 2
    SplitMix64 rng(7007);
    for (int inst = 0; inst < 3; ++inst) {
        double c1 = 0.4 + 0.6 * rng.uniform();
        double c2 = 0.4 + 0.6 * rng.uniform();
        CVector a1 = random_unit(rng, 2), b1 = random_unit(rng, 2);
        CVector a2 = random_unit(rng, 2), b2 = random_unit(rng, 2);
        DecomposedOperator d;
        d.k = 2;
        d.dims = {2, 2};
        d.terms = {{CMatrix(c1 * a1 * a1.adjoint()), CMatrix(b1 * b1.adjoint())},
                   {CMatrix(c2 * a2 * a2.adjoint()), CMatrix(b2 * b2.adjoint())}};
        d.widths = RVector(2);
        d.widths << std::max(c1, c2), 1.0;
        HermitianOperator q = reconstruct(d);

        FrobeniusReport fr = optimize_frobenius(q, 2, 2, 0.4);
        OptimizationReport dec = optimize_decomposed(d, 0.25);
        OracleResult sw = seesaw(q, 2, 2, OptMode::Max);
        if (std::abs(fr.base.opt_value - dec.opt_value) >
            fr.base.effective_error + dec.effective_error + 1e-9)
            out.fail("rank-2 " + std::to_string(inst) + ": algorithms disagree beyond error bars");
        if (!(sw.value >= fr.base.opt_value - fr.base.effective_error - 1e-9 &&
              sw.value <= fr.base.opt_value + fr.base.effective_error + 1e-9))
            out.fail("rank-2 " + std::to_string(inst) + ": frobenius does not bracket see-saw");
        if (!(sw.value >= dec.opt_value - dec.effective_error - 1e-9 &&
              sw.value <= dec.opt_value + dec.effective_error + 1e-9))
            out.fail("rank-2 " + std::to_string(inst) + ": decomposed does not bracket see-saw");
    }
    out.note("3 rank-2 PSD cross-checks done");
}

// --------------------------------------------------------------------------
// Criterion 8: module invariant sweeps.
// --------------------------------------------------------------------------
void criterion_invariants(Outcome& out) {
    // MMW per-iteration loss bounds and the payoff identity (check mode throws
    // on violation)
    SplitMix64 rng(8008);
    for (int rep = 0; rep < 3; ++rep) {
        ObservableFamily f;
        f.w = 1.0;
        f.ops = {random_hermitian_unit(rng, 3), random_hermitian_unit(rng, 3)};
        CPoint p(2);
        p << random_disk(rng, 1.0), random_disk(rng, 1.0);
        MMWOptions check;
        check.check_invariants = true;
        mmw_distance(p, f, 0.4, check);
    }

    // symmetrize idempotence and hermiticity
    for (int rep = 0; rep < 50; ++rep) {
        CMatrix a = random_matrix(rng, 4);
        HermitianOperator s = symmetrize(a);
        if (s.herm_defect > 1e-12) out.fail("symmetrize left a hermiticity defect");
        if ((symmetrize(s.entries).entries - s.entries).cwiseAbs().maxCoeff() > 1e-14)
            out.fail("symmetrize is not idempotent");
    }

    // negation duality on the ZZ instance
    DecomposedOperator zz;
    zz.k = 2;
    zz.dims = {2, 2};
    zz.widths = RVector::Ones(2);
    zz.terms = {{pauli::Z(), pauli::Z()}};
    DecomposedOperator neg = zz;
    neg.terms[0][1] = -pauli::Z();
    PlanOptions min_opt;
    min_opt.mode = OptMode::Min;
    OptimizationReport mn = optimize_decomposed(zz, 0.3, min_opt);
    OptimizationReport mx = optimize_decomposed(neg, 0.3);
    if (std::abs(mx.opt_value + mn.opt_value) > 1e-12) out.fail("negation duality broken");

    // stream determinism
    ObservableFamily f;
    f.ops = {pauli::Z()};
    f.w = 1.0;
    QspaceNetOptions nopt;
    nopt.eps = 0.15;
    nopt.eps_mmw = 0.075;
    FilteredNet n1(f, nopt), n2(f, nopt);
    for (;;) {
        auto a = n1.next();
        auto b = n2.next();
        if (a.has_value() != b.has_value()) {
            out.fail("stream determinism broken (length)");
            break;
        }
        if (!a) break;
        if (a->second != b->second || a->first.dis_estimate != b->first.dis_estimate) {
            out.fail("stream determinism broken (content)");
            break;
        }
    }

    // seesaw monotonicity is self-checked inside the implementation
    HermitianOperator bell = validate_hermitian(CMatrix(bell_vector() * bell_vector().adjoint()));
    for (int rep = 0; rep < 5; ++rep) {
        SeesawOptions sopt;
        sopt.seed = rep;
        seesaw(bell, 2, 2, OptMode::Max, sopt);
    }
    out.note("loss bounds, symmetrize, duality, determinism, see-saw monotonicity");
}

}  // namespace

int main(int argc, char** argv) {
    Harness h;
    const char* env = std::getenv("SEPOPT_CI");
    h.ci = env && std::strlen(env) > 0 && std::strcmp(env, "0") != 0;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--ci") == 0) h.ci = true;
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }
    std::printf("acceptance suite (%s mode)\n", h.ci ? "CI" : "full");

    auto want = [&](int idx) { return only == 0 || only == idx; };
    if (want(1)) h.run(1, "MMW distance correctness", [&](Outcome& o) { criterion_mmw(o, h.ci); });
    if (want(2)) h.run(2, "eps-net coverage and soundness", criterion_net);
    if (want(3))
        h.run(3, "main algorithm sandwich", [&](Outcome& o) { criterion_sandwich(o, h); });
    if (want(4)) h.run(4, "Frobenius algorithm", criterion_frobenius);
    if (want(5)) h.run(5, "circuit POVM decomposition", criterion_circuit);
    if (want(6)) h.run(6, "local Hamiltonian pipeline", criterion_local_ham);
    if (want(7))
        h.run(7, "cross-algorithm agreement", [&](Outcome& o) { criterion_agreement(o, h); });
    if (want(8)) h.run(8, "module invariant sweeps", criterion_invariants);

    std::printf("%d criterion(s) failed\n", h.failures);
    return h.failures;
}
