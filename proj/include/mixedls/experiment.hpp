#pragma once
//
// Project     : mixedls
// Module      : mixedls/experiment.hpp
// Description : experiment orchestration: run one (problem, method) cell
//               against the working-precision direct reference, or a
//               whole benchmark sweep (optionally threaded)
//

#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include "generate.hpp"
#include "metrics.hpp"

namespace mixedls {

enum class method_kind { direct, classical_ir, gmres_left, gmres_bd };

inline const char* to_string(method_kind m) {
    switch (m) {
        case method_kind::direct: return "direct";
        case method_kind::classical_ir: return "ir";
        case method_kind::gmres_left: return "gmres-left";
        case method_kind::gmres_bd: return "gmres-bd";
    }
    return "unknown";
}

struct experiment_report {
    generator_spec spec;
    method_kind method = method_kind::direct;
    double metric1 = 0.0; // err-1 (LSE) or er-1 (GLS)
    double metric2 = 0.0; // err-2 (LSE) or er-2 (GLS)
    std::size_t iterations = 0;
    std::size_t inner_iterations = 0;
    refine_status status = refine_status::converged;
    phase_times timing;
};

namespace detail {

struct lse_reference {
    lse_state state;
    double t_factor = 0.0, t_init = 0.0;
};

inline lse_reference lse_direct_reference(const lse_problem& pb) {
    lse_reference ref;
    stopwatch sw;
    auto F = grq(pb.B, pb.A);
    ref.t_factor = sw.lap();
    ref.state = lse_direct(F, pb.b, pb.d);
    ref.t_init = sw.lap();
    return ref;
}

struct gls_reference {
    gls_state state;
    double t_factor = 0.0, t_init = 0.0;
};

inline gls_reference gls_direct_reference(const gls_problem& pb) {
    gls_reference ref;
    stopwatch sw;
    auto F = gqr(pb.W, pb.V);
    ref.t_factor = sw.lap();
    ref.state = gls_direct(F, pb.d);
    ref.t_init = sw.lap();
    return ref;
}

} // namespace detail

// Generate the problem, compute the binary64 direct reference, run the
// requested method, and report the metrics against the reference. Solver
// failures are captured in the status, never thrown.
inline experiment_report run_experiment(const generator_spec& gs, method_kind method,
                                        const refinement_config& cfg) {
    gs.validate();
    cfg.validate();
    experiment_report rep;
    rep.spec = gs;
    rep.method = method;
    detail::stopwatch sw;

    try {
        if (gs.kind == problem_kind::lse) {
            auto pb = gen_lse_problem(gs);
            rep.timing.other += sw.lap();
            auto ref = detail::lse_direct_reference(pb);
            rep.timing.other += sw.lap();
            lse_state st;
            switch (method) {
                case method_kind::direct:
                    st = ref.state;
                    rep.timing.factorization = ref.t_factor;
                    rep.timing.init = ref.t_init;
                    break;
                case method_kind::classical_ir: {
                    auto res = mplse(pb, cfg);
                    st = std::move(res.state);
                    rep.status = res.trace.status;
                    rep.iterations = res.trace.iterations;
                    rep.timing = res.trace.timing;
                    break;
                }
                case method_kind::gmres_left:
                case method_kind::gmres_bd: {
                    auto res = gmres_refine_lse(pb, cfg,
                                                method == method_kind::gmres_bd
                                                    ? precond_choice::bd_split
                                                    : precond_choice::left);
                    st = std::move(res.state);
                    rep.status = res.trace.status;
                    rep.iterations = res.trace.iterations;
                    rep.inner_iterations = res.trace.inner_iterations;
                    rep.timing = res.trace.timing;
                    break;
                }
            }
            sw.lap();
            rep.metric1 = metric_err1_lse(pb, st.x);
            rep.metric2 = metric_err2_lse(pb, st.x, ref.state.x);
            rep.timing.other += sw.lap();
        } else {
            auto pb = gen_gls_problem(gs);
            rep.timing.other += sw.lap();
            auto ref = detail::gls_direct_reference(pb);
            rep.timing.other += sw.lap();
            gls_state st;
            switch (method) {
                case method_kind::direct:
                    st = ref.state;
                    rep.timing.factorization = ref.t_factor;
                    rep.timing.init = ref.t_init;
                    break;
                case method_kind::classical_ir: {
                    auto res = mpgls(pb, cfg);
                    st = std::move(res.state);
                    rep.status = res.trace.status;
                    rep.iterations = res.trace.iterations;
                    rep.timing = res.trace.timing;
                    break;
                }
                case method_kind::gmres_left:
                case method_kind::gmres_bd: {
                    auto res = gmres_refine_gls(pb, cfg,
                                                method == method_kind::gmres_bd
                                                    ? precond_choice::bd_split
                                                    : precond_choice::left);
                    st = std::move(res.state);
                    rep.status = res.trace.status;
                    rep.iterations = res.trace.iterations;
                    rep.inner_iterations = res.trace.inner_iterations;
                    rep.timing = res.trace.timing;
                    break;
                }
            }
            sw.lap();
            rep.metric1 = metric_er1_gls(pb, st.x, st.y);
            rep.metric2 = metric_er2_gls(st.y, ref.state.y);
            rep.timing.other += sw.lap();
        }
    } catch (const error&) {
        rep.status = refine_status::diverged;
        rep.metric1 = std::numeric_limits<double>::infinity();
        rep.metric2 = std::numeric_limits<double>::infinity();
    }
    return rep;
}

// MIXEDLS_THREADS caps runner parallelism (defaults to the hardware count).
inline unsigned runner_threads() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MIXEDLS_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && (unsigned long)v < hw) hw = (unsigned)v;
    }
    return hw;
}

struct sweep_cell {
    generator_spec spec;
    method_kind method = method_kind::direct;
};

// Independent cells may run in parallel; reports come back in cell order.
inline std::vector<experiment_report> run_sweep(const std::vector<sweep_cell>& cells,
                                                const refinement_config& cfg) {
    std::vector<experiment_report> reports(cells.size());
    const unsigned nthreads = std::min<std::size_t>(runner_threads(), cells.size());
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            reports[i] = run_experiment(cells[i].spec, cells[i].method, cfg);
        return reports;
    }
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= cells.size()) return;
                i = next++;
            }
            reports[i] = run_experiment(cells[i].spec, cells[i].method, cfg);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return reports;
}

// The benchmark-table suites at two scales.
inline std::vector<sweep_cell> paper_sweep_cells(problem_kind kind, bool full_scale) {
    std::vector<sweep_cell> cells;
    if (kind == problem_kind::lse) {
        generator_spec gs;
        gs.kind = problem_kind::lse;
        if (full_scale) {
            gs.n = 2048;
            gs.m = 8 * gs.n;
            gs.p = gs.n / 32;
        } else {
            gs.m = 2048;
            gs.n = 256;
            gs.p = 8;
        }
        gs.seed = 42;
        for (double cond : {1e3, 1e5, 1e7, 1e9})
            for (auto method :
                 {method_kind::classical_ir, method_kind::gmres_left, method_kind::gmres_bd}) {
                gs.cond = cond;
                cells.push_back({gs, method});
            }
    } else {
        generator_spec gs;
        gs.kind = problem_kind::gls;
        if (full_scale) {
            gs.n = 2048;
            gs.m = gs.n / 32;
            gs.p = 8 * gs.n;
        } else {
            gs.n = 1024;
            gs.m = 32;
            gs.p = 1152;
        }
        gs.seed = 42;
        for (double cond : {1e3, 1e5, 1e7})
            for (auto method : {method_kind::classical_ir, method_kind::gmres_bd}) {
                gs.cond = cond;
                cells.push_back({gs, method});
            }
    }
    return cells;
}

} // namespace mixedls
