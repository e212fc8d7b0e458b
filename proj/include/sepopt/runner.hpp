#pragma once

#include "sepopt/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sepopt {

/// One batch job: everything the CLI consumed, embeddable into the report so
/// that --replay can reproduce the run bit-for-bit.
struct JobConfig {
    std::string subcommand;
    json input;           // embedded input document
    json point;           // distance: target point
    double delta = 0.25;
    OptMode mode = OptMode::Max;
    double eps = 0.05;    // distance: additive error
    bool digest = false;  // distance: record the phase-history digest
    double exact_grid = 0.0;  // distance: also run the exhaustive reference when > 0
    double grid = 0.3;    // oracle: exhaustive net resolution
    std::string method = "both";  // oracle: seesaw | exhaustive | both
    int restarts = 32;
    int iters = 200;
    std::uint64_t seed = 0;
    int threads = 1;
    double mmw_slack = 0.5;
    int spectral_party = -1;
    bool filter = true;
    bool merge = false;
    bool bound = false;  // circuit: also optimize acceptance
    Caps caps;
    bool progress = false;
};

inline json to_json(const JobConfig& c) {
    return json{{"subcommand", c.subcommand},
                {"input", c.input},
                {"point", c.point},
                {"delta", c.delta},
                {"mode", to_string(c.mode)},
                {"eps", c.eps},
                {"digest", c.digest},
                {"exact_grid", c.exact_grid},
                {"grid", c.grid},
                {"method", c.method},
                {"restarts", c.restarts},
                {"iters", c.iters},
                {"seed", c.seed},
                {"threads", c.threads},
                {"mmw_slack", c.mmw_slack},
                {"spectral_party", c.spectral_party},
                {"filter", c.filter},
                {"merge", c.merge},
                {"bound", c.bound},
                {"caps", json{{"raw_net", c.caps.raw_net},
                              {"disk", c.caps.disk},
                              {"mmw_iters", c.caps.mmw_iters},
                              {"terms", c.caps.terms},
                              {"inner_accepted", c.caps.inner_accepted}}}};
}

inline JobConfig job_config_from_json(const json& j) {
    JobConfig c;
    c.subcommand = j.value("subcommand", "");
    c.input = j.value("input", json());
    c.point = j.value("point", json());
    c.delta = j.value("delta", 0.25);
    c.mode = j.value("mode", "max") == std::string("min") ? OptMode::Min : OptMode::Max;
    c.eps = j.value("eps", 0.05);
    c.digest = j.value("digest", false);
    c.exact_grid = j.value("exact_grid", 0.0);
    c.grid = j.value("grid", 0.3);
    c.method = j.value("method", "both");
    c.restarts = j.value("restarts", 32);
    c.iters = j.value("iters", 200);
    c.seed = j.value("seed", std::uint64_t(0));
    c.threads = j.value("threads", 1);
    c.mmw_slack = j.value("mmw_slack", 0.5);
    c.spectral_party = j.value("spectral_party", -1);
    c.filter = j.value("filter", true);
    c.merge = j.value("merge", false);
    c.bound = j.value("bound", false);
    if (j.contains("caps")) {
        const json& caps = j["caps"];
        c.caps.raw_net = caps.value("raw_net", c.caps.raw_net);
        c.caps.disk = caps.value("disk", c.caps.disk);
        c.caps.mmw_iters = caps.value("mmw_iters", c.caps.mmw_iters);
        c.caps.terms = caps.value("terms", c.caps.terms);
        c.caps.inner_accepted = caps.value("inner_accepted", c.caps.inner_accepted);
    }
    return c;
}

namespace detail {

inline PlanOptions plan_options(const JobConfig& c) {
    PlanOptions opt;
    opt.mode = c.mode;
    opt.mmw_slack_factor = c.mmw_slack;
    opt.spectral_party = c.spectral_party;
    opt.filter = c.filter;
    opt.caps = c.caps;
    opt.threads = c.threads <= 0 ? static_cast<int>(hardware_threads()) : c.threads;
    return opt;
}

// nominal printed MMW schedule for each netted party
inline json nominal_schedules(const DecomposedOperator& d, const EnumerationPlan& plan) {
    json out = json::array();
    for (std::size_t j = 0; j < plan.netted.size(); ++j) {
        int t = plan.netted[j];
        double w = plan.widths(t);
        double gamma = plan.eps_mmw_t(static_cast<Index>(j)) / (8.0 * plan.m * w);
        double lnd = d.dims[static_cast<std::size_t>(t)] > 1
                         ? std::log(static_cast<double>(d.dims[static_cast<std::size_t>(t)]))
                         : 0.0;
        double iters = gamma > 0 ? std::ceil(lnd / (gamma * gamma)) : 0.0;
        out.push_back(json{{"party", t}, {"gamma", gamma}, {"iterations", iters}});
    }
    return out;
}

inline void attach_progress(const JobConfig& c, PlanOptions& opt) {
    if (!c.progress) return;
    opt.progress = [](std::int64_t n) {
        std::fprintf(stderr, "... %lld net points visited\n", static_cast<long long>(n));
    };
}

}  // namespace detail

/// Executes one job and returns the report document (with the consumed config
/// embedded under "config" for --replay).
inline json run_job(const JobConfig& c) {
    auto t_start = std::chrono::steady_clock::now();
    json report;
    if (c.subcommand == "decomposed") {
        DecomposedOperator d = decomposed_from_json(c.input);
        PlanOptions opt = detail::plan_options(c);
        detail::attach_progress(c, opt);
        EnumerationPlan plan = make_plan(d, c.delta, opt);
        OptimizationReport rep = optimize_decomposed(d, plan);
        report = to_json(rep);
        report["mmw_schedule"] = detail::nominal_schedules(d, plan);
    } else if (c.subcommand == "frobenius") {
        if (!c.input.contains("dim_a") || !c.input.contains("dim_b") ||
            !c.input.contains("matrix"))
            throw InputError("frobenius: input needs fields dim_a, dim_b, matrix");
        HermitianOperator q = validate_hermitian(matrix_from_json(c.input["matrix"]));
        FrobeniusReport rep = optimize_frobenius(q, c.input["dim_a"].get<Index>(),
                                                 c.input["dim_b"].get<Index>(), c.delta);
        report = to_json(rep.base);
        report["frobenius"] = json{{"gamma_size", rep.info.gamma_size},
                                   {"ball_points", rep.info.ball_points},
                                   {"ball_eps", rep.info.ball_eps},
                                   {"frob_norm", rep.info.frob_norm},
                                   {"mu1", rep.info.mu1},
                                   {"best_alpha", to_json(rep.info.best_alpha)},
                                   {"product_witness", to_json(rep.info.product_witness)}};
    } else if (c.subcommand == "local-ham") {
        LocalHamiltonian h = local_ham_from_json(c.input);
        PlanOptions opt = detail::plan_options(c);
        detail::attach_progress(c, opt);
        if (h.a && h.b) {
            PromiseResult res = solve_promise(h, c.delta, opt);
            report = to_json(res.report);
            report["verdict"] = to_string(res.verdict);
            report["midpoint"] = res.midpoint;
            report["terms_m"] = res.term_count_m;
            report["terms_r"] = res.term_count_r;
        } else {
            DecomposedOperator d = decompose_hamiltonian(h);
            opt.mode = OptMode::Min;
            OptimizationReport rep = optimize_decomposed(d, c.delta, opt);
            report = to_json(rep);
            report["terms_m"] = d.M();
            report["terms_r"] = static_cast<int>(h.terms.size());
        }
        report["algorithm"] = "local-ham";
    } else if (c.subcommand == "circuit") {
        VerifierCircuit circ = circuit_from_json(c.input);
        PropagateOptions popt;
        popt.merge = c.merge;
        popt.term_cap = c.caps.terms;
        PropagatedPOVM povm = backward_propagate(circ, popt);
        DecomposedOperator d = povm.to_decomposed();
        report["algorithm"] = "circuit";
        report["sound"] = c.filter;
        report["decomposition"] =
            json{{"terms", povm.terms.size()},
                 {"type_ii_gates", povm.r_used},
                 {"trace_record", povm.trace_record},
                 {"widths", std::vector<double>{d.widths(0), d.widths(1)}}};
        if (c.bound) {
            PlanOptions opt = detail::plan_options(c);
            opt.mode = OptMode::Max;
            detail::attach_progress(c, opt);
            OptimizationReport rep = optimize_decomposed(d, c.delta, opt);
            rep.algorithm = "circuit";
            json bound = to_json(rep);
            bound["decomposition"] = report["decomposition"];
            report = std::move(bound);
        }
    } else if (c.subcommand == "distance") {
        ObservableFamily f = family_from_json(c.input);
        CPoint p = cvector_from_json(c.point);
        MMWOptions mopt;
        mopt.iter_cap = c.caps.mmw_iters;
        mopt.record_phase_digest = c.digest;
        DistanceCertificate cert = mmw_distance(p, f, c.eps, mopt);
        report = json{{"algorithm", "distance"},
                      {"value", cert.value},
                      {"value_clamped", std::max(cert.value, 0.0)},
                      {"eps", cert.eps},
                      {"gamma", cert.gamma},
                      {"iterations", cert.iterations},
                      {"sound", true}};
        if (cert.phase_digest) report["phase_digest"] = *cert.phase_digest;
        if (c.exact_grid > 0) {
            ExactDistanceResult ex = exact_distance_small_full(p, f, c.exact_grid);
            report["exact"] = json{{"value", ex.value},
                                   {"gap", ex.gap},
                                   {"net_points", ex.net_points},
                                   {"grid", c.exact_grid}};
        }
    } else if (c.subcommand == "oracle") {
        if (!c.input.contains("dim_a") || !c.input.contains("dim_b") ||
            !c.input.contains("matrix"))
            throw InputError("oracle: input needs fields dim_a, dim_b, matrix");
        HermitianOperator q = validate_hermitian(matrix_from_json(c.input["matrix"]));
        Index da = c.input["dim_a"].get<Index>(), db = c.input["dim_b"].get<Index>();
        report = json{{"algorithm", "oracle"}, {"mode", to_string(c.mode)}, {"sound", true}};
        if (c.method == "seesaw" || c.method == "both") {
            SeesawOptions sopt;
            sopt.restarts = c.restarts;
            sopt.iters = c.iters;
            sopt.seed = c.seed;
            report["seesaw"] = to_json(seesaw(q, da, db, c.mode, sopt));
        }
        if (c.method == "exhaustive" || c.method == "both")
            report["exhaustive"] = to_json(exhaustive_product_net(q, da, db, c.grid, c.mode));
        if (c.method != "seesaw" && c.method != "exhaustive" && c.method != "both")
            throw InputError("oracle: unknown method '" + c.method + "'");
    } else {
        throw InputError("unknown subcommand '" + c.subcommand + "'");
    }
    report["config"] = to_json(c);
    if (!report.contains("stats") || !report["stats"].contains("wall_ms"))
        report["wall_ms"] = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t_start)
                                .count();
    else
        report["wall_ms"] = report["stats"]["wall_ms"];
    return report;
}

struct ReplayResult {
    bool match = true;
    json fresh;
    std::string detail;
};

/// Re-runs the embedded config and compares the headline numbers: identical
/// optimum to 1e-12 and identical witness indices.
inline ReplayResult replay(const json& report) {
    if (!report.contains("config")) throw InputError("replay: report has no embedded config");
    JobConfig c = job_config_from_json(report["config"]);
    ReplayResult res;
    res.fresh = run_job(c);
    auto cmp_num = [&](const char* key) {
        if (!report.contains(key) || !res.fresh.contains(key)) return;
        double a = report[key].get<double>(), b = res.fresh[key].get<double>();
        if (std::abs(a - b) > 1e-12) {
            res.match = false;
            res.detail += std::string(key) + " differs; ";
        }
    };
    cmp_num("opt");
    cmp_num("value");
    if (report.contains("witness") && res.fresh.contains("witness")) {
        if (report["witness"]["indices"] != res.fresh["witness"]["indices"]) {
            res.match = false;
            res.detail += "witness indices differ; ";
        }
    }
    if (report.contains("verdict") && res.fresh.contains("verdict") &&
        report["verdict"] != res.fresh["verdict"]) {
        res.match = false;
        res.detail += "verdict differs; ";
    }
    return res;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InputError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace sepopt
