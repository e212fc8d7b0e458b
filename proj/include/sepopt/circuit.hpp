#pragma once

#include "sepopt/core.hpp"
#include "sepopt/operators.hpp"
#include "sepopt/sep_opt.hpp"

#include <variant>

namespace sepopt {

struct SingleQubitGate {
    int q = 0;
    CMatrix u;  // 2x2 unitary
};

struct CnotGate {
    int c = 0;
    int t = 0;
};

using Gate = std::variant<SingleQubitGate, CnotGate>;

/// Two-prover verifier circuit over qubit spaces A1, A2, V (in that global
/// order). The output bit is the first qubit of V; acceptance is outcome 1.
struct VerifierCircuit {
    int m1 = 0, m2 = 0, v = 1;
    std::vector<Gate> gates;

    int total_qubits() const { return m1 + m2 + v; }
    int accept_qubit() const { return m1 + m2; }
};

enum class Space { A1, A2, V };
enum class GateType { TypeI, TypeII };

inline Space space_of(const VerifierCircuit& c, int q) {
    if (q < c.m1) return Space::A1;
    if (q < c.m1 + c.m2) return Space::A2;
    return Space::V;
}

inline void validate_circuit(const VerifierCircuit& c) {
    if (c.m1 < 0 || c.m2 < 0) throw InputError("circuit: negative qubit count");
    if (c.v < 1) throw InputError("circuit: V needs at least the output qubit");
    for (std::size_t g = 0; g < c.gates.size(); ++g) {
        if (const auto* sq = std::get_if<SingleQubitGate>(&c.gates[g])) {
            if (sq->q < 0 || sq->q >= c.total_qubits())
                throw InputError("circuit: gate " + std::to_string(g) + " qubit out of range");
            if (sq->u.rows() != 2 || sq->u.cols() != 2)
                throw InputError("circuit: gate " + std::to_string(g) + " matrix is not 2x2");
            CMatrix defect = sq->u.adjoint() * sq->u - CMatrix::Identity(2, 2);
            if (defect.cwiseAbs().maxCoeff() > 1e-9)
                throw InputError("circuit: gate " + std::to_string(g) + " is not unitary");
        } else {
            const auto& cx = std::get<CnotGate>(c.gates[g]);
            if (cx.c < 0 || cx.c >= c.total_qubits() || cx.t < 0 || cx.t >= c.total_qubits())
                throw InputError("circuit: gate " + std::to_string(g) + " qubit out of range");
            if (cx.c == cx.t)
                throw InputError("circuit: gate " + std::to_string(g) + " control equals target");
        }
    }
}

/// Single-qubit gates act within one space; only cross-space CNOTs are TypeII.
inline std::vector<GateType> classify_gates(const VerifierCircuit& c) {
    validate_circuit(c);
    std::vector<GateType> types;
    types.reserve(c.gates.size());
    for (const Gate& g : c.gates) {
        if (std::holds_alternative<SingleQubitGate>(g)) {
            types.push_back(GateType::TypeI);
        } else {
            const auto& cx = std::get<CnotGate>(g);
            types.push_back(space_of(c, cx.c) == space_of(c, cx.t) ? GateType::TypeI
                                                                   : GateType::TypeII);
        }
    }
    return types;
}

namespace detail {

// M <- E(u)^adj M E(u) where E(u) acts on qubit `q` of an n-qubit register
// (qubit 0 = most significant bit of the index).
inline void sandwich_single_qubit(CMatrix& m, int q, int n, const CMatrix& u) {
    const Index dim = m.rows();
    const Index bit = Index(1) << (n - 1 - q);
    const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
    // rows: M <- E^adj M
    for (Index r = 0; r < dim; ++r) {
        if (r & bit) continue;
        Index r1 = r | bit;
        for (Index col = 0; col < dim; ++col) {
            Complex a = m(r, col), b = m(r1, col);
            m(r, col) = std::conj(u00) * a + std::conj(u10) * b;
            m(r1, col) = std::conj(u01) * a + std::conj(u11) * b;
        }
    }
    // cols: M <- M E
    for (Index c = 0; c < dim; ++c) {
        if (c & bit) continue;
        Index c1 = c | bit;
        for (Index row = 0; row < dim; ++row) {
            Complex a = m(row, c), b = m(row, c1);
            m(row, c) = a * u00 + b * u10;
            m(row, c1) = a * u01 + b * u11;
        }
    }
}

// M <- P M P for the permutation P flipping `target` when `control` is set
// (both within the same register).
inline void sandwich_cnot(CMatrix& m, int control, int target, int n) {
    const Index dim = m.rows();
    const Index cbit = Index(1) << (n - 1 - control);
    const Index tbit = Index(1) << (n - 1 - target);
    for (Index r = 0; r < dim; ++r) {  // rows
        if ((r & cbit) && !(r & tbit)) {
            Index r2 = r | tbit;
            for (Index col = 0; col < dim; ++col) std::swap(m(r, col), m(r2, col));
        }
    }
    for (Index c = 0; c < dim; ++c) {  // cols
        if ((c & cbit) && !(c & tbit)) {
            Index c2 = c | tbit;
            for (Index row = 0; row < dim; ++row) std::swap(m(row, c), m(row, c2));
        }
    }
}

// pi_a M pi_b on the control qubit: keep rows with bit = a, cols with bit = b.
inline CMatrix project_control(const CMatrix& m, int q, int n, int a, int b) {
    const Index dim = m.rows();
    const Index bit = Index(1) << (n - 1 - q);
    CMatrix out = CMatrix::Zero(dim, dim);
    for (Index r = 0; r < dim; ++r) {
        if (((r & bit) != 0) != (a != 0)) continue;
        for (Index c = 0; c < dim; ++c) {
            if (((c & bit) != 0) != (b != 0)) continue;
            out(r, c) = m(r, c);
        }
    }
    return out;
}

// X^a M X^b on the target qubit.
inline CMatrix flip_target(const CMatrix& m, int q, int n, int a, int b) {
    const Index dim = m.rows();
    const Index bit = Index(1) << (n - 1 - q);
    CMatrix out(dim, dim);
    for (Index r = 0; r < dim; ++r)
        for (Index c = 0; c < dim; ++c)
            out(a ? (r ^ bit) : r, b ? (c ^ bit) : c) = m(r, c);
    return out;
}

}  // namespace detail

/// Tensor-factor terms over (A1, A2) summing to the acceptance POVM.
struct PropagatedPOVM {
    std::vector<std::pair<CMatrix, CMatrix>> terms;
    int r_used = 0;
    std::vector<std::int64_t> trace_record;  // term count after each gate

    DecomposedOperator to_decomposed() const {
        DecomposedOperator d;
        d.k = 2;
        d.dims = {terms.empty() ? 1 : terms.front().first.rows(),
                  terms.empty() ? 1 : terms.front().second.rows()};
        d.widths = RVector::Zero(2);
        for (const auto& [f1, f2] : terms) {
            d.terms.push_back({f1, f2});
            d.widths(0) = std::max(d.widths(0), operator_norm(f1));
            d.widths(1) = std::max(d.widths(1), operator_norm(f2));
        }
        return d;
    }
};

struct PropagateOptions {
    std::int64_t term_cap = 4096;
    // Drop terms with an exactly zero factor and fold bitwise-identical factor
    // tuples. Off by default: folding can push factor norms past 1.
    bool merge = false;
};

/// Backward-propagates the acceptance projector P = 1 (x) 1 (x) |1><1|_out
/// through the circuit: TypeI gates conjugate a single factor per term, each
/// cross-space CNOT expands every term four ways (the CNOT written as
/// |0><0| (x) 1 + |1><1| (x) X, sandwiched on both sides), and the ancilla
/// sandwich <0...0| . |0...0> on V collapses the V factor to a scalar. All
/// factors stay products of unitaries, projectors, and X, so their operator
/// norms never exceed 1.
inline PropagatedPOVM backward_propagate(const VerifierCircuit& c,
                                         const PropagateOptions& opt = {}) {
    validate_circuit(c);
    std::vector<GateType> types = classify_gates(c);
    std::int64_t r_total = 0;
    for (GateType t : types)
        if (t == GateType::TypeII) ++r_total;
    double projected = std::pow(4.0, static_cast<double>(r_total));
    if (projected > static_cast<double>(opt.term_cap))
        throw CapExceeded("backward_propagate: 4^" + std::to_string(r_total) + " = " +
                              std::to_string(projected) + " terms exceed cap",
                          projected, static_cast<double>(opt.term_cap));

    const Index d1 = Index(1) << c.m1;
    const Index d2 = Index(1) << c.m2;
    const Index dv = Index(1) << c.v;

    struct Term {
        CMatrix f1, f2, fv;
    };
    CMatrix acc = CMatrix::Zero(dv, dv);  // |1><1| on V's first qubit
    for (Index i = 0; i < dv; ++i)
        if (i & (dv >> 1)) acc(i, i) = 1.0;
    std::vector<Term> terms{{CMatrix::Identity(d1, d1), CMatrix::Identity(d2, d2), acc}};

    PropagatedPOVM out;
    out.r_used = static_cast<int>(r_total);

    auto local = [&](int q) -> std::pair<int, int> {  // (local index, register size)
        switch (space_of(c, q)) {
            case Space::A1: return {q, c.m1};
            case Space::A2: return {q - c.m1, c.m2};
            default: return {q - c.m1 - c.m2, c.v};
        }
    };
    auto factor_of = [&](Term& term, int q) -> CMatrix& {
        switch (space_of(c, q)) {
            case Space::A1: return term.f1;
            case Space::A2: return term.f2;
            default: return term.fv;
        }
    };

    for (std::size_t g = c.gates.size(); g-- > 0;) {
        if (const auto* sq = std::get_if<SingleQubitGate>(&c.gates[g])) {
            auto [lq, n] = local(sq->q);
            for (Term& term : terms)
                detail::sandwich_single_qubit(factor_of(term, sq->q), lq, n, sq->u);
        } else {
            const auto& cx = std::get<CnotGate>(c.gates[g]);
            if (types[g] == GateType::TypeI) {
                auto [lc, n] = local(cx.c);
                auto [lt, n2] = local(cx.t);
                (void)n2;
                for (Term& term : terms)
                    detail::sandwich_cnot(factor_of(term, cx.c), lc, lt, n);
            } else {
                auto [lc, nc] = local(cx.c);
                auto [lt, nt] = local(cx.t);
                std::vector<Term> expanded;
                expanded.reserve(terms.size() * 4);
                for (const Term& term : terms)
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b) {
                            Term next = term;
                            factor_of(next, cx.c) =
                                detail::project_control(factor_of(next, cx.c), lc, nc, a, b);
                            factor_of(next, cx.t) =
                                detail::flip_target(factor_of(next, cx.t), lt, nt, a, b);
                            expanded.push_back(std::move(next));
                        }
                terms.swap(expanded);
            }
        }
        out.trace_record.push_back(static_cast<std::int64_t>(terms.size()));
    }

    // sandwich by 1 (x) |0...0><0...0| and trace out V
    for (const Term& term : terms) {
        Complex scalar = term.fv(0, 0);
        out.terms.emplace_back(scalar * term.f1, term.f2);
    }

    if (opt.merge) {
        std::vector<std::pair<CMatrix, CMatrix>> merged;
        std::vector<double> mult;
        for (const auto& [f1, f2] : out.terms) {
            if (f1.cwiseAbs().maxCoeff() == 0.0 || f2.cwiseAbs().maxCoeff() == 0.0) continue;
            bool folded = false;
            for (std::size_t i = 0; i < merged.size(); ++i) {
                if (merged[i].first == f1 && merged[i].second == f2) {
                    mult[i] += 1.0;
                    folded = true;
                    break;
                }
            }
            if (!folded) {
                merged.emplace_back(f1, f2);
                mult.push_back(1.0);
            }
        }
        out.terms.clear();
        for (std::size_t i = 0; i < merged.size(); ++i)
            out.terms.emplace_back(mult[i] * merged[i].first, merged[i].second);
        if (out.terms.empty())  // everything vanished: the POVM is zero
            out.terms.emplace_back(CMatrix::Zero(d1, d1), CMatrix::Zero(d2, d2));
    }
    return out;
}

struct DirectOptions {
    int qubit_cap = 12;
};

/// Dense evaluation of the acceptance POVM by conjugating the projector
/// through the whole circuit and sandwiching the ancilla state.
inline HermitianOperator povm_direct(const VerifierCircuit& c, const DirectOptions& opt = {}) {
    validate_circuit(c);
    if (c.total_qubits() > opt.qubit_cap)
        throw CapExceeded("povm_direct: " + std::to_string(c.total_qubits()) +
                              " qubits exceed the dense-simulation cap",
                          static_cast<double>(c.total_qubits()),
                          static_cast<double>(opt.qubit_cap));
    const int n = c.total_qubits();
    const Index dim = Index(1) << n;
    const Index abit = Index(1) << (n - 1 - c.accept_qubit());
    CMatrix p = CMatrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i)
        if (i & abit) p(i, i) = 1.0;

    for (std::size_t g = c.gates.size(); g-- > 0;) {
        if (const auto* sq = std::get_if<SingleQubitGate>(&c.gates[g]))
            detail::sandwich_single_qubit(p, sq->q, n, sq->u);
        else {
            const auto& cx = std::get<CnotGate>(c.gates[g]);
            detail::sandwich_cnot(p, cx.c, cx.t, n);
        }
    }

    // keep the V = |0...0> block
    const Index da = Index(1) << (c.m1 + c.m2);
    const Index dv = Index(1) << c.v;
    CMatrix q(da, da);
    for (Index r = 0; r < da; ++r)
        for (Index col = 0; col < da; ++col) q(r, col) = p(r * dv, col * dv);
    return validate_hermitian(q, 1e-8);
}

struct AcceptanceResult {
    PropagatedPOVM povm;
    OptimizationReport report;
};

/// Feeds the propagated decomposition into the main algorithm (k = 2, max):
/// OPT approximates the best acceptance probability over unentangled proof
/// pairs within the report's effective error.
inline AcceptanceResult bound_acceptance(const VerifierCircuit& c, double delta,
                                         const PropagateOptions& popt = {},
                                         const PlanOptions& plan_opt = {}) {
    AcceptanceResult res;
    res.povm = backward_propagate(c, popt);
    DecomposedOperator d = res.povm.to_decomposed();
    PlanOptions opt = plan_opt;
    opt.mode = OptMode::Max;
    res.report = optimize_decomposed(d, delta, opt);
    res.report.algorithm = "circuit";
    return res;
}

}  // namespace sepopt
