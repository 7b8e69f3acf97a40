//
// Project     : mixedls
// Module      : tools/mixedls.cpp
// Description : benchmark CLI: single-cell runs, paper-table sweeps, and
//               the validation suites
//

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mixedls/mixedls.hpp"

namespace {

using namespace mixedls;

method_kind parse_method(const std::string& s) {
    if (s == "direct") return method_kind::direct;
    if (s == "ir") return method_kind::classical_ir;
    if (s == "gmres-left") return method_kind::gmres_left;
    return method_kind::gmres_bd;
}

report_format parse_format(const std::string& s) {
    return s == "csv" ? report_format::csv : report_format::json;
}

void emit(const std::vector<experiment_report>& reports, report_format fmt,
          const std::string& out) {
    if (out.empty())
        write_reports(reports, fmt, std::cout);
    else
        write_reports(reports, fmt, out);
}

int run_validate(const std::string& suite) {
    std::vector<validation_check> checks;
    if (suite == "factor")
        checks = validate_factor();
    else if (suite == "precond")
        checks = validate_precond();
    else
        checks = validate_spectrum();
    bool all = true;
    for (const auto& c : checks) {
        all = all && c.passed;
        std::printf("%s  %-46s observed %.3e  bound %.3e\n", c.passed ? "PASS" : "FAIL",
                    c.name.c_str(), c.observed, c.bound);
    }
    std::printf("%s: %zu/%zu checks passed\n", all ? "OK" : "FAILURE", [&] {
        std::size_t k = 0;
        for (const auto& c : checks) k += c.passed;
        return k;
    }(), checks.size());
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-precision solvers and benchmarks for constrained and "
                 "generalized least squares"};
    app.require_subcommand(1);

    std::string bench_kind;
    std::size_t m = 0, n = 0, p = 0, maxit = 40;
    double cond = 1e3, tol = 1e-13;
    std::uint64_t seed = 0;
    std::string method = "ir", dist = "geometric", out, format = "json";
    auto* bench = app.add_subcommand("bench", "run one (problem, method) cell");
    bench->add_option("kind", bench_kind, "problem kind")
        ->required()
        ->check(CLI::IsMember({"lse", "gls"}));
    bench->add_option("--m", m, "LSE: rows of A; GLS: columns of W")->required();
    bench->add_option("--n", n, "LSE: columns of A and B; GLS: rows of W and V")->required();
    bench->add_option("--p", p, "LSE: rows of B; GLS: columns of V")->required();
    bench->add_option("--cond", cond, "target condition number of the stacked matrix");
    bench->add_option("--seed", seed, "generator seed");
    bench->add_option("--method", method)
        ->check(CLI::IsMember({"direct", "ir", "gmres-left", "gmres-bd"}));
    bench->add_option("--dist", dist)->check(CLI::IsMember({"geometric", "arithmetic"}));
    bench->add_option("--tol", tol, "stopping tolerance (default 1e-13)");
    bench->add_option("--maxit", maxit, "maximal refinement iterations (default 40)");
    bench->add_option("--out", out, "report path (stdout when omitted)");
    bench->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));

    std::string suite, scale = "desk", sweep_out, sweep_format = "json";
    auto* sweep = app.add_subcommand("sweep", "reproduce the accuracy-table layouts");
    sweep->add_option("--suite", suite)
        ->required()
        ->check(CLI::IsMember({"paper-lse", "paper-gls"}));
    sweep->add_option("--scale", scale)->check(CLI::IsMember({"desk", "full"}));
    sweep->add_option("--out", sweep_out, "report path (stdout when omitted)");
    sweep->add_option("--format", sweep_format)->check(CLI::IsMember({"json", "csv"}));

    std::string vsuite;
    auto* validate = app.add_subcommand("validate", "run a property suite and print pass/fail");
    validate->add_option("--suite", vsuite)
        ->required()
        ->check(CLI::IsMember({"spectrum", "precond", "factor"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*bench) {
            generator_spec gs;
            gs.kind = bench_kind == "lse" ? problem_kind::lse : problem_kind::gls;
            gs.m = m;
            gs.n = n;
            gs.p = p;
            gs.cond = cond;
            gs.seed = seed;
            gs.distribution =
                dist == "arithmetic" ? sv_distribution::arithmetic : sv_distribution::geometric;
            refinement_config cfg;
            cfg.tol = tol;
            cfg.maxit = maxit;
            auto rep = run_experiment(gs, parse_method(method), cfg);
            emit({rep}, parse_format(format), out);
            return rep.status == refine_status::converged ? 0 : 1;
        }
        if (*sweep) {
            const auto kind = suite == "paper-lse" ? problem_kind::lse : problem_kind::gls;
            auto cells = paper_sweep_cells(kind, scale == "full");
            refinement_config cfg;
            auto reports = run_sweep(cells, cfg);
            emit(reports, parse_format(sweep_format), sweep_out);
            return 0;
        }
        return run_validate(vsuite);
    } catch (const mixedls::error& e) {
        std::cerr << "mixedls: " << e.what() << "\n";
        return 2;
    }
}
