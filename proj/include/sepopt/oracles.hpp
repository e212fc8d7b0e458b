#pragma once

#include "sepopt/core.hpp"
#include "sepopt/distance.hpp"
#include "sepopt/operators.hpp"

#include <string>

namespace sepopt {

/// Ground-truth estimate for OptSep on small bipartite instances. In max mode
/// the value is a lower bound on OptSep (both methods search inside the
/// feasible set); in min mode an upper bound.
struct OracleResult {
    double value = 0.0;
    ProductStateWitness witness;
    std::string method;
    int restarts_used = 0;
    long iterations = 0;
    double grid = 0.0;
    double lipschitz_slack = 0.0;  // exhaustive only: |value - OptSep| bound
};

struct SeesawOptions {
    int restarts = 32;
    int iters = 200;
    std::uint64_t seed = 0;
    double rel_tol = 1e-12;
};

/// Alternating maximization: fix one party's vector, solve the other exactly
/// as an extreme eigenvector of the contracted operator. Each half-step is an
/// exact optimization, so the objective sequence is monotone per restart.
inline OracleResult seesaw(const HermitianOperator& q, Index dim_a, Index dim_b, OptMode mode,
                           const SeesawOptions& opt = {}) {
    if (dim_a * dim_b != q.dim()) throw InputError("seesaw: dimensions do not factor dim(Q)");
    const double sign = (mode == OptMode::Max) ? 1.0 : -1.0;

    OracleResult best;
    best.method = "seesaw";
    best.value = -1e300;  // in sign-adjusted units
    long total_iters = 0;

    for (int r = 0; r < opt.restarts; ++r) {
        SplitMix64 rng(opt.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r) + 1);
        CVector v(dim_b);
        for (Index i = 0; i < dim_b; ++i) v(i) = rng.cgaussian();
        v /= v.norm();

        double value = -1e300;
        CVector u;
        for (int it = 0; it < opt.iters; ++it) {
            Eigenpair ua = extreme_eigenvalue(partial_contract_second(q, v), mode);
            u = ua.vector;
            double half_step = sign * ua.value;
            Eigenpair vb = extreme_eigenvalue(partial_contract(q, u), mode);
            v = vb.vector;
            ++total_iters;
            double next = sign * vb.value;
            // each half-step is an exact eigenvector optimization
            if (it > 0 && (half_step < value - 1e-9 || next < half_step - 1e-9))
                throw NumericalError("seesaw: objective decreased across a half-step");
            if (it > 0 && next - value <= opt.rel_tol * std::max(1.0, std::abs(value))) {
                value = std::max(value, next);
                break;
            }
            value = std::max(value, next);
        }
        if (value > best.value) {
            best.value = value;
            best.witness.party_vectors = {u, v};
        }
    }
    best.value *= sign;
    best.restarts_used = opt.restarts;
    best.iterations = total_iters;
    best.witness.value = product_objective(q, best.witness);
    if (std::abs(best.witness.value - best.value) > 1e-9)
        throw NumericalError("seesaw: witness value drifted from objective");
    return best;
}

struct ExhaustiveOptions {
    std::int64_t pair_cap = 20000000;
    std::int64_t net_cap = 2000000;
};

/// Brute-force net over pure states of each party. The optimum over the net is
/// within 2 ||Q||_op * grid * (#parties) of the true optimum.
inline OracleResult exhaustive_product_net(const HermitianOperator& q, Index dim_a, Index dim_b,
                                           double grid, OptMode mode,
                                           const ExhaustiveOptions& opt = {}) {
    if (dim_a * dim_b != q.dim())
        throw InputError("exhaustive_product_net: dimensions do not factor dim(Q)");
    if (dim_a > 3 || dim_b > 3)
        throw InputError("exhaustive_product_net: party dimensions too large (<= 3 supported)");
    std::vector<CVector> net_a = pure_state_net(dim_a, grid, opt.net_cap);
    std::vector<CVector> net_b = pure_state_net(dim_b, grid, opt.net_cap);
    double pairs = static_cast<double>(net_a.size()) * static_cast<double>(net_b.size());
    if (pairs > static_cast<double>(opt.pair_cap))
        throw CapExceeded("exhaustive_product_net: " + std::to_string(pairs) +
                              " pairs exceed cap",
                          pairs, static_cast<double>(opt.pair_cap));

    const double sign = (mode == OptMode::Max) ? 1.0 : -1.0;
    OracleResult best;
    best.method = "exhaustive";
    best.grid = grid;
    double best_val = -1e300;
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t ia = 0; ia < net_a.size(); ++ia) {
        HermitianOperator contracted = partial_contract(q, net_a[ia]);
        for (std::size_t ib = 0; ib < net_b.size(); ++ib) {
            double val =
                sign * std::real(net_b[ib].dot(contracted.entries * net_b[ib]));
            if (val > best_val) {
                best_val = val;
                best_a = ia;
                best_b = ib;
            }
        }
    }
    best.value = sign * best_val;
    best.witness.party_vectors = {net_a[best_a], net_b[best_b]};
    best.witness.value = product_objective(q, best.witness);
    best.lipschitz_slack = 2.0 * operator_norm(q.entries) * grid * 2.0;
    if (std::abs(best.witness.value - best.value) > 1e-9)
        throw NumericalError("exhaustive_product_net: witness value drifted from objective");
    return best;
}

}  // namespace sepopt
