#pragma once

#include "sepopt/circuit.hpp"
#include "sepopt/core.hpp"
#include "sepopt/distance.hpp"
#include "sepopt/frobenius.hpp"
#include "sepopt/local_ham.hpp"
#include "sepopt/operators.hpp"
#include "sepopt/oracles.hpp"
#include "sepopt/sep_opt.hpp"

#include <json.hpp>

namespace sepopt {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scalars, vectors, matrices. Entries are explicit {"re": x, "im": y} objects.
// ---------------------------------------------------------------------------

inline json to_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

inline Complex complex_from_json(const json& j) {
    if (!j.is_object() || !j.contains("re") || !j.contains("im"))
        throw InputError("complex entry must be an object with fields re, im");
    if (!j["re"].is_number() || !j["im"].is_number())
        throw InputError("complex entry fields re, im must be numbers");
    return Complex(j["re"].get<double>(), j["im"].get<double>());
}

inline json to_json(const CVector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
    return out;
}

inline CVector cvector_from_json(const json& j) {
    if (!j.is_array()) throw InputError("vector must be an array of {re, im} entries");
    CVector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i]);
    return v;
}

inline json to_json(const CMatrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return json{{"dim", m.rows()}, {"entries", std::move(rows)}};
}

inline CMatrix matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("entries"))
        throw InputError("matrix must be an object with field entries");
    const json& rows = j["entries"];
    if (!rows.is_array() || rows.empty()) throw InputError("matrix entries must be a 2D array");
    Index d = static_cast<Index>(rows.size());
    if (j.contains("dim") && j["dim"].get<Index>() != d)
        throw InputError("matrix field dim does not match the number of rows");
    CMatrix m(d, static_cast<Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || static_cast<Index>(rows[r].size()) != m.cols())
            throw InputError("matrix row " + std::to_string(r) + " has inconsistent length");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Index>(r), static_cast<Index>(c)) = complex_from_json(rows[r][c]);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Domain objects
// ---------------------------------------------------------------------------

inline json to_json(const DecomposedOperator& d) {
    json terms = json::array();
    for (const auto& tuple : d.terms) {
        json t = json::array();
        for (const CMatrix& f : tuple) t.push_back(to_json(f));
        terms.push_back(std::move(t));
    }
    json dims = json::array(), widths = json::array();
    for (Index dt : d.dims) dims.push_back(dt);
    for (int t = 0; t < d.k; ++t) widths.push_back(d.widths(t));
    return json{{"k", d.k}, {"dims", dims}, {"widths", widths}, {"terms", std::move(terms)}};
}

inline DecomposedOperator decomposed_from_json(const json& j) {
    DecomposedOperator d;
    if (!j.contains("k")) throw InputError("decomposed operator: missing field k");
    d.k = j["k"].get<int>();
    if (!j.contains("dims") || !j["dims"].is_array())
        throw InputError("decomposed operator: missing field dims");
    for (const auto& v : j["dims"]) d.dims.push_back(v.get<Index>());
    if (!j.contains("widths") || !j["widths"].is_array())
        throw InputError("decomposed operator: missing field widths");
    d.widths = RVector(static_cast<Index>(j["widths"].size()));
    for (std::size_t t = 0; t < j["widths"].size(); ++t)
        d.widths(static_cast<Index>(t)) = j["widths"][t].get<double>();
    if (!j.contains("terms") || !j["terms"].is_array())
        throw InputError("decomposed operator: missing field terms");
    for (const auto& tuple : j["terms"]) {
        if (!tuple.is_array()) throw InputError("decomposed operator: term must be an array");
        std::vector<CMatrix> fs;
        for (const auto& f : tuple) fs.push_back(matrix_from_json(f));
        d.terms.push_back(std::move(fs));
    }
    validate_decomposed(d);
    return d;
}

inline json to_json(const ObservableFamily& f) {
    json ops = json::array();
    for (const CMatrix& q : f.ops) ops.push_back(to_json(q));
    return json{{"dim", f.dim()}, {"w", f.w}, {"ops", std::move(ops)}};
}

inline ObservableFamily family_from_json(const json& j) {
    ObservableFamily f;
    if (!j.contains("ops") || !j["ops"].is_array())
        throw InputError("observable family: missing field ops");
    for (const auto& q : j["ops"]) f.ops.push_back(matrix_from_json(q));
    if (!j.contains("w")) throw InputError("observable family: missing field w");
    f.w = j["w"].get<double>();
    validate_family(f);
    return f;
}

// parties are 1-based in the interchange format, qubits 0-based
inline json to_json(const LocalHamiltonian& h) {
    json terms = json::array();
    for (const auto& t : h.terms) {
        json support = json::array();
        for (auto [party, qubit] : t.support) support.push_back(json::array({party + 1, qubit}));
        terms.push_back(json{{"support", support}, {"matrix", to_json(t.matrix)}});
    }
    json out{{"layout", json{{"k", h.k}, {"n", h.n}}}, {"terms", std::move(terms)}};
    if (h.a) out["a"] = *h.a;
    if (h.b) out["b"] = *h.b;
    return out;
}

inline LocalHamiltonian local_ham_from_json(const json& j) {
    LocalHamiltonian h;
    if (!j.contains("layout")) throw InputError("local hamiltonian: missing field layout");
    h.k = j["layout"].value("k", 0);
    h.n = j["layout"].value("n", 0);
    if (!j.contains("terms") || !j["terms"].is_array())
        throw InputError("local hamiltonian: missing field terms");
    for (const auto& tj : j["terms"]) {
        LocalTerm t;
        if (!tj.contains("support") || !tj["support"].is_array())
            throw InputError("local hamiltonian: term missing field support");
        for (const auto& s : tj["support"]) {
            if (!s.is_array() || s.size() != 2)
                throw InputError("local hamiltonian: support entries are [party, qubit] pairs");
            int party = s[0].get<int>();
            if (party < 1) throw InputError("local hamiltonian: parties are 1-based");
            t.support.emplace_back(party - 1, s[1].get<int>());
        }
        if (!tj.contains("matrix")) throw InputError("local hamiltonian: term missing matrix");
        t.matrix = matrix_from_json(tj["matrix"]);
        h.terms.push_back(std::move(t));
    }
    if (j.contains("a")) h.a = j["a"].get<double>();
    if (j.contains("b")) h.b = j["b"].get<double>();
    validate_local_hamiltonian(h);
    return h;
}

inline json to_json(const VerifierCircuit& c) {
    json gates = json::array();
    for (const Gate& g : c.gates) {
        if (const auto* sq = std::get_if<SingleQubitGate>(&g))
            gates.push_back(json{{"kind", "u1"}, {"q", sq->q}, {"matrix", to_json(sq->u)}});
        else {
            const auto& cx = std::get<CnotGate>(g);
            gates.push_back(json{{"kind", "cnot"}, {"c", cx.c}, {"t", cx.t}});
        }
    }
    return json{{"layout", json{{"a1", c.m1}, {"a2", c.m2}, {"v", c.v}}},
                {"gates", std::move(gates)}};
}

inline VerifierCircuit circuit_from_json(const json& j) {
    VerifierCircuit c;
    if (!j.contains("layout")) throw InputError("circuit: missing field layout");
    c.m1 = j["layout"].value("a1", 0);
    c.m2 = j["layout"].value("a2", 0);
    c.v = j["layout"].value("v", 0);
    if (!j.contains("gates") || !j["gates"].is_array())
        throw InputError("circuit: missing field gates");
    for (const auto& gj : j["gates"]) {
        std::string kind = gj.value("kind", "");
        if (kind == "u1") {
            SingleQubitGate sq;
            if (!gj.contains("q") || !gj.contains("matrix"))
                throw InputError("circuit: u1 gate needs fields q, matrix");
            sq.q = gj["q"].get<int>();
            sq.u = matrix_from_json(gj["matrix"]);
            c.gates.push_back(sq);
        } else if (kind == "cnot") {
            CnotGate cx;
            if (!gj.contains("c") || !gj.contains("t"))
                throw InputError("circuit: cnot gate needs fields c, t");
            cx.c = gj["c"].get<int>();
            cx.t = gj["t"].get<int>();
            c.gates.push_back(cx);
        } else {
            throw InputError("circuit: unknown gate kind '" + kind + "'");
        }
    }
    validate_circuit(c);
    return c;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const ErrorBudget& b) {
    return json{{"net_contribution", b.net_contribution},
                {"filter_slack", b.filter_slack},
                {"delta", b.delta},
                {"effective_error", b.effective_error}};
}

inline json to_json(const RunStats& s) {
    return json{{"raw_total", s.raw_total},
                {"leaves_visited", s.leaves_visited},
                {"oracle_calls", s.oracle_calls},
                {"accepted", s.accepted},
                {"tuples_evaluated", s.tuples_evaluated},
                {"wall_ms", s.wall_ms}};
}

inline json to_json(const OptimizationReport& r) {
    json tuple = json::array();
    for (const CPoint& p : r.witness.tuple) tuple.push_back(to_json(CVector(p)));
    json net_params = json::array();
    for (const NetParams& np : r.net_params) {
        // nominal printed schedule gamma = eps_mmw/(8 M w) is reconstructed by
        // the caller; here we echo the measured net quantities
        net_params.push_back(json{{"party", np.party},
                                  {"eps", np.eps},
                                  {"eps_mmw", np.eps_mmw},
                                  {"disk_points", np.disk_points},
                                  {"raw_count", np.raw_count},
                                  {"accepted", np.accepted}});
    }
    return json{{"algorithm", r.algorithm},
                {"mode", to_string(r.mode)},
                {"opt", r.opt_value},
                {"effective_error", r.effective_error},
                {"sound", r.sound},
                {"delta", r.delta},
                {"spectral_party", r.spectral_party},
                {"budget", to_json(r.budget)},
                {"witness",
                 json{{"tuple", std::move(tuple)},
                      {"indices", r.witness.indices},
                      {"spectral_vector", to_json(r.witness.spectral_vector)},
                      {"eigenvalue", r.witness.eigenvalue}}},
                {"stats", to_json(r.stats)},
                {"net_params", std::move(net_params)}};
}

inline json to_json(const ProductStateWitness& w) {
    json vs = json::array();
    for (const CVector& v : w.party_vectors) vs.push_back(to_json(v));
    return json{{"party_vectors", std::move(vs)}, {"value", w.value}};
}

inline json to_json(const OracleResult& r) {
    return json{{"value", r.value},
                {"method", r.method},
                {"witness", to_json(r.witness)},
                {"restarts", r.restarts_used},
                {"iterations", r.iterations},
                {"grid", r.grid},
                {"lipschitz_slack", r.lipschitz_slack}};
}

}  // namespace sepopt
