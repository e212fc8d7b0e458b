#include "test_helpers.hpp"

#include "sepopt/oracles.hpp"
#include "sepopt/sep_opt.hpp"

using namespace sepopt;
using namespace test_helpers;

namespace {

DecomposedOperator make_decomposed(std::vector<std::vector<CMatrix>> terms,
                                   std::vector<double> widths) {
    DecomposedOperator d;
    d.k = static_cast<int>(widths.size());
    d.widths = RVector(d.k);
    for (int t = 0; t < d.k; ++t) d.widths(t) = widths[static_cast<std::size_t>(t)];
    d.terms = std::move(terms);
    d.dims.clear();
    for (int t = 0; t < d.k; ++t) d.dims.push_back(d.terms.front()[static_cast<std::size_t>(t)].rows());
    return d;
}

DecomposedOperator zz() { return make_decomposed({{pauli::Z(), pauli::Z()}}, {1, 1}); }

}  // namespace

TEST_CASE("plan resolutions follow the per-party width formula") {
    DecomposedOperator d = make_decomposed(
        {{CMatrix(0.5 * pauli::Z()), CMatrix(0.5 * pauli::Z())}}, {0.5, 0.5});
    EnumerationPlan plan = make_plan(d, 0.2);
    // eps_1 = w_1 delta / ((k-1) W) = 0.5 * 0.2 / 0.25 = 0.4
    CHECK(plan.eps_t(0) == doctest::Approx(0.4));
    ErrorBudget budget = error_budget(plan);
    CHECK(budget.net_contribution[0] == doctest::Approx(0.2));
    CHECK(budget.delta == doctest::Approx(0.2));
    CHECK(budget.effective_error == doctest::Approx(0.4));  // default slack doubles it

    EnumerationPlan one = make_plan(zz(), 0.2);
    CHECK(one.eps_t(0) == doctest::Approx(0.2));
    CHECK(error_budget(one).net_contribution[0] == doctest::Approx(0.2));

    DecomposedOperator three =
        make_decomposed({{pauli::Z(), pauli::Z(), pauli::Z()}}, {1, 1, 1});
    EnumerationPlan p3 = make_plan(three, 0.2);
    CHECK(p3.eps_t(0) == doctest::Approx(0.1));
    CHECK(p3.eps_t(1) == doctest::Approx(0.1));
    ErrorBudget b3 = error_budget(p3);
    CHECK(b3.net_contribution[0] == doctest::Approx(0.1));
    CHECK(b3.net_contribution[1] == doctest::Approx(0.1));
    CHECK(b3.delta == doctest::Approx(0.2));

    CHECK_THROWS_AS(make_plan(zz(), 0.0), InputError);
}

TEST_CASE("build_Qk degenerate and passthrough cases") {
    DecomposedOperator d = zz();
    CPoint zero(1);
    zero(0) = 0;
    CHECK(build_Qk(d, {zero}).cwiseAbs().maxCoeff() == 0.0);

    CPoint onep(1);
    onep(0) = 1;
    CHECK(max_abs_diff(build_Qk(d, {onep}), pauli::Z()) < 1e-15);

    // k=3, M=2, disjoint coefficient supports cancel the cross terms
    DecomposedOperator three = make_decomposed(
        {{pauli::Z(), pauli::Z(), pauli::X()}, {pauli::X(), pauli::X(), pauli::Z()}},
        {1, 1, 1});
    CPoint q1(2), q2(2);
    q1 << 1, 0;
    q2 << 0, 1;
    CHECK(build_Qk(three, {q1, q2}).cwiseAbs().maxCoeff() == 0.0);

    // linearity in each party's point (k = 2)
    SplitMix64 rng(5);
    DecomposedOperator two =
        make_decomposed({{pauli::Z(), pauli::Z()}, {pauli::X(), pauli::X()}}, {1, 1});
    CPoint a(2), b(2);
    a << Complex(0.3, 0.1), Complex(-0.2, 0.4);
    b << Complex(0.1, -0.5), Complex(0.6, 0.0);
    CMatrix lhs = build_Qk(two, {CPoint(0.7 * a + 0.3 * b)});
    CMatrix rhs = 0.7 * build_Qk(two, {a}) + 0.3 * build_Qk(two, {b});
    CHECK(max_abs_diff(lhs, rhs) < 1e-14);

    CHECK_THROWS_AS(build_Qk(d, {zero, zero}), InputError);
}

TEST_CASE("optimize_decomposed identity objective") {
    DecomposedOperator d =
        make_decomposed({{CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)}}, {1, 1});
    PlanOptions opt;
    OptimizationReport rep = optimize_decomposed(d, 0.1, opt);
    CHECK(std::abs(rep.opt_value - 1.0) <= rep.effective_error + 1e-12);
    CHECK(rep.effective_error == doctest::Approx(0.2));
    CHECK(rep.sound);
    CHECK(rep.stats.tuples_evaluated > 0);
    CHECK(rep.witness.tuple.size() == 1);
    CHECK(rep.witness.eigenvalue == doctest::Approx(rep.opt_value));
}

TEST_CASE("optimize_decomposed on (Z,Z) brackets the separable optimum") {
    OptimizationReport rep = optimize_decomposed(zz(), 0.25);
    // true OptSep = 1, attained at |00>
    CHECK(std::abs(rep.opt_value - 1.0) <= rep.effective_error + 1e-12);
    CHECK(rep.opt_value >= 1.0 - 0.25 - 1e-9);  // one-sided: coverage can only lose delta

    // negation duality: optimize(-Q, max) = -optimize(Q, min) with the same net
    DecomposedOperator neg = make_decomposed({{pauli::Z(), CMatrix(-pauli::Z())}}, {1, 1});
    PlanOptions min_opt;
    min_opt.mode = OptMode::Min;
    OptimizationReport mn = optimize_decomposed(zz(), 0.25, min_opt);
    OptimizationReport mx = optimize_decomposed(neg, 0.25);
    CHECK(mx.opt_value == doctest::Approx(-mn.opt_value).epsilon(1e-12));
    REQUIRE(mx.witness.indices.size() == 1);
    CHECK(mx.witness.indices[0] == mn.witness.indices[0]);
}

TEST_CASE("optimize_decomposed scale covariance") {
    OptimizationReport base = optimize_decomposed(zz(), 0.25);
    DecomposedOperator scaled = make_decomposed({{pauli::Z(), CMatrix(2.0 * pauli::Z())}}, {1, 2});
    OptimizationReport big = optimize_decomposed(scaled, 0.5);
    CHECK(big.opt_value == doctest::Approx(2.0 * base.opt_value).epsilon(1e-12));
    CHECK(big.witness.indices[0] == base.witness.indices[0]);
}

TEST_CASE("optimize_decomposed M=2 instance against the see-saw oracle") {
    DecomposedOperator d =
        make_decomposed({{pauli::Z(), pauli::Z()}, {pauli::X(), pauli::X()}}, {1, 1});
    OptimizationReport rep = optimize_decomposed(d, 0.5);
    HermitianOperator q = reconstruct(d);
    OracleResult sw = seesaw(q, 2, 2, OptMode::Max);  // = 1 (ZZ+XX over products)
    CHECK(sw.value == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(rep.opt_value - sw.value) <= rep.effective_error + 1e-9);
    CHECK(rep.stats.oracle_calls > 0);
    CHECK(rep.net_params.size() == 1);
    CHECK(rep.net_params[0].eps == doctest::Approx(0.5));
}

TEST_CASE("optimize_decomposed three parties, both modes") {
    DecomposedOperator three =
        make_decomposed({{pauli::Z(), pauli::Z(), pauli::Z()}}, {1, 1, 1});
    OptimizationReport mx = optimize_decomposed(three, 0.8);
    CHECK(std::abs(mx.opt_value - 1.0) <= mx.effective_error + 1e-12);
    PlanOptions mopt;
    mopt.mode = OptMode::Min;
    OptimizationReport mn = optimize_decomposed(three, 0.8, mopt);
    CHECK(std::abs(mn.opt_value - (-1.0)) <= mn.effective_error + 1e-12);
    CHECK(mx.witness.tuple.size() == 2);
}

TEST_CASE("optimize_decomposed degenerate and error paths") {
    DecomposedOperator empty;
    empty.k = 2;
    empty.dims = {2, 2};
    empty.widths = RVector::Ones(2);
    OptimizationReport rep = optimize_decomposed(empty, 0.5);
    CHECK(rep.opt_value == 0.0);

    DecomposedOperator zerow = make_decomposed({{CMatrix::Zero(2, 2), pauli::Z()}}, {0, 1});
    CHECK(optimize_decomposed(zerow, 0.5).opt_value == 0.0);

    DecomposedOperator k1;
    k1.k = 1;
    k1.dims = {2};
    k1.widths = RVector::Ones(1);
    k1.terms = {{pauli::Z()}};
    CHECK_THROWS_AS(optimize_decomposed(k1, 0.5), InputError);

    PlanOptions tiny;
    tiny.caps.raw_net = 4;
    CHECK_THROWS_WITH_AS(optimize_decomposed(zz(), 0.05, tiny),
                         doctest::Contains("exceeds cap"), CapExceeded);

    PlanOptions term_cap;
    term_cap.caps.terms = 0;
    CHECK_THROWS_AS(optimize_decomposed(zz(), 0.5, term_cap), CapExceeded);
}

TEST_CASE("spectral party rotation brackets the same optimum") {
    DecomposedOperator d = make_decomposed({{pauli::Z(), pauli::X()}}, {1, 1});
    PlanOptions a;  // default: last party spectral
    PlanOptions b;
    b.spectral_party = 0;
    OptimizationReport ra = optimize_decomposed(d, 0.25, a);
    OptimizationReport rb = optimize_decomposed(d, 0.25, b);
    CHECK(std::abs(ra.opt_value - 1.0) <= ra.effective_error + 1e-12);
    CHECK(std::abs(rb.opt_value - 1.0) <= rb.effective_error + 1e-12);
    CHECK(ra.spectral_party == 1);
    CHECK(rb.spectral_party == 0);

    PlanOptions c;
    c.spectral_party = -2;  // auto: widest party solved spectrally
    DecomposedOperator skew = make_decomposed({{pauli::Z(), CMatrix(2.0 * pauli::X())}}, {1, 2});
    OptimizationReport rc = optimize_decomposed(skew, 0.5, c);
    CHECK(rc.spectral_party == 1);
}

TEST_CASE("no-filter mode marks the report unsound") {
    PlanOptions opt;
    opt.filter = false;
    OptimizationReport rep = optimize_decomposed(zz(), 0.4, opt);
    CHECK(!rep.sound);
    CHECK(rep.stats.oracle_calls == 0);
    // unfiltered optimum can only overestimate
    OptimizationReport sound_rep = optimize_decomposed(zz(), 0.4);
    CHECK(rep.opt_value >= sound_rep.opt_value - 1e-12);
}

TEST_CASE("delta refinement keeps the estimate at least as close (fixed instance)") {
    OptimizationReport coarse = optimize_decomposed(zz(), 0.5);
    OptimizationReport fine = optimize_decomposed(zz(), 0.25);
    CHECK(std::abs(fine.opt_value - 1.0) <= std::abs(coarse.opt_value - 1.0) + 1e-9);
}

TEST_CASE("parallel execution matches single-threaded results") {
    DecomposedOperator d =
        make_decomposed({{pauli::Z(), pauli::Z()}, {pauli::X(), pauli::X()}}, {1, 1});
    PlanOptions seq, par;
    par.threads = 3;
    OptimizationReport a = optimize_decomposed(d, 0.6, seq);
    OptimizationReport b = optimize_decomposed(d, 0.6, par);
    CHECK(a.opt_value == b.opt_value);
    CHECK(a.witness.indices[0] == b.witness.indices[0]);
    CHECK(a.stats.accepted == b.stats.accepted);
}
