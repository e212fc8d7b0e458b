#include "test_helpers.hpp"

#include "sepopt/local_ham.hpp"
#include "sepopt/oracles.hpp"

using namespace sepopt;
using namespace test_helpers;

namespace {

LocalTerm term(CMatrix m, std::vector<std::pair<int, int>> support) {
    LocalTerm t;
    t.matrix = std::move(m);
    t.support = std::move(support);
    return t;
}

CMatrix one_proj() {
    CMatrix m = CMatrix::Zero(2, 2);
    m(1, 1) = 1;
    return m;
}

}  // namespace

TEST_CASE("decompose_term single-party supports stay single tuples") {
    auto tuples = decompose_term(term(pauli::Z(), {{0, 0}}), 2, 1);
    REQUIRE(tuples.size() == 1);
    CHECK(max_abs_diff(tuples[0][0], pauli::Z()) < 1e-14);
    CHECK(max_abs_diff(tuples[0][1], CMatrix::Identity(2, 2)) < 1e-14);

    // X (x) X inside party 0 of a 2-qubit register: one tuple, identity partner
    CMatrix xx = kron(pauli::X(), pauli::X());
    auto t2 = decompose_term(term(xx, {{0, 0}, {0, 1}}), 2, 2);
    REQUIRE(t2.size() == 1);
    CHECK(max_abs_diff(t2[0][0], xx) < 1e-14);
    CHECK(max_abs_diff(t2[0][1], CMatrix::Identity(4, 4)) < 1e-14);

    // embedding respects qubit positions: Z on qubit 1 of a 2-qubit party
    auto t3 = decompose_term(term(pauli::Z(), {{0, 1}}), 2, 2);
    CHECK(max_abs_diff(t3[0][0], kron(CMatrix::Identity(2, 2), pauli::Z())) < 1e-14);
}

TEST_CASE("decompose_term cross-party Pauli expansion") {
    CMatrix proj11 = kron(one_proj(), one_proj());
    auto tuples = decompose_term(term(proj11, {{0, 0}, {1, 0}}), 2, 1);
    CHECK(tuples.size() == 4);  // (I-Z)(x)(I-Z)/4
    CMatrix rebuilt = CMatrix::Zero(4, 4);
    for (const auto& t : tuples) rebuilt += kron(t[0], t[1]);
    CHECK(max_abs_diff(rebuilt, proj11) < 1e-12);

    // coefficients land on the lowest supported party; the other factor is a
    // unit-norm Pauli string
    for (const auto& t : tuples) {
        CHECK(operator_norm(t[1]) == doctest::Approx(1.0));
        CHECK(operator_norm(t[0]) <= operator_norm(proj11) + 1e-9);
    }

    CHECK_THROWS_AS(decompose_term(term(pauli::Z(), {{0, 5}}), 2, 1), InputError);
    CHECK_THROWS_AS(decompose_term(term(proj11, {{0, 0}, {0, 0}}), 2, 1), InputError);
}

TEST_CASE("decompose_hamiltonian counts, widths, reconstruction") {
    LocalHamiltonian h;
    h.k = 2;
    h.n = 2;
    SplitMix64 rng(41);
    // a within-party dense term, a cross-party random 2-qubit term, a product term
    h.terms.push_back(term(random_hermitian(rng, 4).entries, {{0, 0}, {0, 1}}));
    h.terms.push_back(term(random_hermitian(rng, 4).entries, {{0, 1}, {1, 0}}));
    h.terms.push_back(term(kron(pauli::X(), pauli::Y()), {{0, 0}, {1, 1}}));
    DecomposedOperator d = decompose_hamiltonian(h);
    validate_decomposed(d);
    CHECK(d.M() <= 3 * 16);
    double max_norm = 0;
    for (const auto& t : h.terms) max_norm = std::max(max_norm, operator_norm(t.matrix));
    CHECK(d.widths.maxCoeff() <= std::max(max_norm, 1.0) + 1e-9);

    CHECK(max_abs_diff(reconstruct_dense(d), local_hamiltonian_dense(h)) < 1e-9);

    // terms inside one party never expand
    LocalHamiltonian inside;
    inside.k = 2;
    inside.n = 1;
    inside.terms.push_back(term(pauli::Z(), {{0, 0}}));
    inside.terms.push_back(term(pauli::X(), {{1, 0}}));
    CHECK(decompose_hamiltonian(inside).M() == 2);
}

TEST_CASE("random 2-local reconstruction sweep") {
    SplitMix64 rng(43);
    for (int rep = 0; rep < 25; ++rep) {
        LocalHamiltonian h;
        h.k = 2;
        h.n = 1 + static_cast<int>(rng.next() % 2);
        int r = 1 + static_cast<int>(rng.next() % 3);
        for (int i = 0; i < r; ++i) {
            int kind = static_cast<int>(rng.next() % 3);
            if (kind == 0) {  // single qubit anywhere
                int party = static_cast<int>(rng.next() % 2);
                int qubit = static_cast<int>(rng.next() % h.n);
                h.terms.push_back(term(random_hermitian(rng, 2).entries, {{party, qubit}}));
            } else if (kind == 1 && h.n == 2) {  // two qubits inside one party
                int party = static_cast<int>(rng.next() % 2);
                h.terms.push_back(
                    term(random_hermitian(rng, 4).entries, {{party, 0}, {party, 1}}));
            } else {  // cross-party pair
                int qa = static_cast<int>(rng.next() % h.n);
                int qb = static_cast<int>(rng.next() % h.n);
                h.terms.push_back(term(random_hermitian(rng, 4).entries, {{0, qa}, {1, qb}}));
            }
        }
        DecomposedOperator d = decompose_hamiltonian(h);
        CHECK(d.M() <= 16 * r);
        CHECK(max_abs_diff(reconstruct_dense(d), local_hamiltonian_dense(h)) < 1e-9);
    }
}

TEST_CASE("solve_promise adjudication") {
    LocalHamiltonian h;
    h.k = 2;
    h.n = 1;
    h.terms.push_back(term(one_proj(), {{0, 0}}));
    h.terms.push_back(term(one_proj(), {{1, 0}}));
    // separable minimum is 0 at |0>|0>
    h.a = 1.5;
    h.b = 0.0;
    PromiseResult low = solve_promise(h, 0.37);
    CHECK(low.verdict == PromiseVerdict::Low);
    CHECK(low.report.mode == OptMode::Min);
    CHECK(std::abs(low.report.opt_value - 0.0) <= low.report.effective_error + 1e-9);
    CHECK(low.term_count_m == 2);
    CHECK(low.term_count_r == 2);

    h.a = -1.0;
    h.b = -2.5;  // OptSep = 0 >= a: the HIGH side
    PromiseResult high = solve_promise(h, 0.37);
    CHECK(high.verdict == PromiseVerdict::High);

    h.a = 0.5;
    h.b = 0.4;  // error bar spans the gap regardless of OPT
    PromiseResult inc = solve_promise(h, 0.4);
    CHECK(inc.verdict == PromiseVerdict::Inconclusive);

    h.a.reset();
    CHECK_THROWS_AS(solve_promise(h, 0.3), InputError);
    h.a = -1.0;
    h.b = 2.0;  // a <= b
    CHECK_THROWS_AS(solve_promise(h, 0.3), InputError);
}
