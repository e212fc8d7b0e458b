#pragma once

#include "sepopt/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace sepopt {

/// Batch front end: parse, dispatch, write the report. Exit codes: 0 success,
/// 1 input error, 2 cap exceeded.
inline int run_cli(int argc, const char* const* argv) {
    // --replay bypasses normal parsing: the config is embedded in the report
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--replay") {
            if (i + 1 >= argc) {
                std::cerr << "error: --replay needs a report path\n";
                return 1;
            }
            try {
                ReplayResult res = replay(load_json_file(argv[i + 1]));
                std::cout << res.fresh.dump(2) << "\n";
                if (!res.match) {
                    std::cerr << "replay mismatch: " << res.detail << "\n";
                    return 1;
                }
                std::cerr << "replay matched\n";
                return 0;
            } catch (const CapExceeded& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 1;
            }
        }
    }

    CLI::App app{"Separable-state optimization via epsilon-net enumeration"};
    app.require_subcommand(1);

    JobConfig cfg;
    cfg.caps.terms = term_cap_from_env(cfg.caps.terms);
    cfg.threads = 0;  // resolve to hardware below
    std::string input_path, output_path, point_str, mode_str = "max";
    bool no_filter = false, quiet = false;

    auto add_common = [&](CLI::App* sub, bool needs_input = true) {
        if (needs_input)
            sub->add_option("--input", input_path, "input JSON path")->required();
        sub->add_option("--output", output_path, "report path (default: stdout)");
        sub->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
        sub->add_option("--seed", cfg.seed, "seed for randomized components");
        sub->add_option("--cap-raw", cfg.caps.raw_net, "raw net tuple cap");
        sub->add_option("--cap-disk", cfg.caps.disk, "per-coordinate disk net cap");
        sub->add_option("--cap-mmw-iters", cfg.caps.mmw_iters, "MMW iteration cap");
        sub->add_option("--cap-terms", cfg.caps.terms, "decomposition term cap");
        sub->add_flag("--quiet", quiet, "suppress progress output");
    };
    auto add_opt_common = [&](CLI::App* sub) {
        sub->add_option("--delta", cfg.delta, "target additive error");
        sub->add_option("--mode", mode_str, "max | min");
        sub->add_option("--mmw-slack", cfg.mmw_slack, "eps_mmw as a fraction of eps_t");
        sub->add_option("--spectral-party", cfg.spectral_party,
                        "party solved spectrally (-1 last, -2 auto)");
        sub->add_flag("--no-filter", no_filter,
                      "skip distance filtering (diagnostic; result marked unsound)");
    };

    CLI::App* dec = app.add_subcommand("decomposed", "optimize a decomposed operator");
    add_common(dec);
    add_opt_common(dec);
    CLI::App* fro = app.add_subcommand("frobenius", "PSD bipartite optimizer");
    add_common(fro);
    fro->add_option("--delta", cfg.delta, "target additive error");
    CLI::App* lham = app.add_subcommand("local-ham", "k-partite local Hamiltonian");
    add_common(lham);
    add_opt_common(lham);
    CLI::App* circ = app.add_subcommand("circuit", "verifier circuit POVM decomposition");
    add_common(circ);
    add_opt_common(circ);
    circ->add_flag("--merge", cfg.merge, "fold identical factor tuples, drop zero terms");
    circ->add_flag("--bound", cfg.bound, "also optimize the acceptance probability");
    CLI::App* dist = app.add_subcommand("distance", "MMW distance to the Q-space");
    add_common(dist);
    dist->add_option("--point", point_str, "target point JSON, e.g. '[{\"re\":0,\"im\":1}]'")
        ->required();
    dist->add_option("--eps", cfg.eps, "additive error");
    dist->add_flag("--digest", cfg.digest, "record the phase-history digest");
    dist->add_option("--exact-grid", cfg.exact_grid,
                     "also run the exhaustive reference at this resolution");
    CLI::App* orc = app.add_subcommand("oracle", "see-saw / exhaustive reference");
    add_common(orc);
    orc->add_option("--method", cfg.method, "seesaw | exhaustive | both");
    orc->add_option("--grid", cfg.grid, "exhaustive net resolution");
    orc->add_option("--restarts", cfg.restarts, "see-saw restarts");
    orc->add_option("--iters", cfg.iters, "see-saw iterations per restart");
    orc->add_option("--mode", mode_str, "max | min");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        cfg.subcommand = app.get_subcommands().front()->get_name();
        if (mode_str != "max" && mode_str != "min")
            throw InputError("mode must be 'max' or 'min'");
        cfg.mode = mode_str == "min" ? OptMode::Min : OptMode::Max;
        cfg.filter = !no_filter;
        cfg.progress = !quiet;
        if (cfg.delta <= 0) throw InputError("delta must be positive");
        if (cfg.subcommand == "distance" && cfg.eps <= 0)
            throw InputError("eps must be positive");
        if (cfg.threads == 0) cfg.threads = static_cast<int>(hardware_threads());
        cfg.input = load_json_file(input_path);
        if (!point_str.empty()) {
            try {
                cfg.point = json::parse(point_str);
            } catch (const std::exception& e) {
                throw InputError(std::string("malformed --point JSON: ") + e.what());
            }
        }
        json report = run_job(cfg);
        if (output_path.empty()) {
            std::cout << report.dump(2) << "\n";
        } else {
            std::ofstream out(output_path);
            if (!out) throw InputError("cannot write output file: " + output_path);
            out << report.dump(2) << "\n";
        }
        return 0;
    } catch (const CapExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace sepopt
