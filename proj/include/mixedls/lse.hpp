#pragma once
//
// Project     : mixedls
// Module      : mixedls/lse.hpp
// Description : equality-constrained least squares: null-space direct
//               solver, correction-system cascade, and the four-precision
//               classical iterative refinement driver
//

#include "factor.hpp"
#include "refine.hpp"

namespace mixedls {

// min ||A x - b||  s.t.  B x = d, with rank(B) = p and rank([A; B]) = n
// assumed (not checked here).
struct lse_problem {
    dense_matrix<double> A; // m x n
    dense_matrix<double> B; // p x n
    std::vector<double> b;  // m
    std::vector<double> d;  // p

    index_t m() const { return A.rows(); }
    index_t n() const { return A.cols(); }
    index_t p() const { return B.rows(); }

    void validate() const {
        if (A.empty() || B.empty()) throw dimension_error("lse_problem: empty matrix");
        if (B.cols() != n()) throw dimension_error("lse_problem: A and B column counts differ");
        if (p() > n() || n() > m() + p())
            throw dimension_error("lse_problem: requires p <= n <= m + p");
        if (b.size() != m() || d.size() != p())
            throw dimension_error("lse_problem: rhs length mismatch");
    }
};

// solution iterate x, residual iterate r = b - A x, constraint multiplier v
struct lse_state {
    std::vector<double> x;
    std::vector<double> r;
    std::vector<double> v;
};

namespace detail {

// Null-space solve for x through the GRQ factors:
//   R y2 = d,  c = Z^T b,  T11 y1 = c1 - T12 y2,  x = Q^T [y1; y2]
template <typename S>
std::vector<S> lse_direct_x(const grq_factors<S>& f, const std::vector<S>& b,
                            const std::vector<S>& d) {
    const index_t n = f.n, p = f.p;
    if (b.size() != f.m || d.size() != p) throw dimension_error("lse_direct: rhs length mismatch");
    std::vector<S> y2 = trsv(f.R, d);
    std::vector<S> c = f.Z.apply(b, true);
    std::vector<S> rhs(c.begin(), c.begin() + (n - p));
    if (p > 0) {
        auto t12y2 = gemv_sub(f.T, 0, n - p, n - p, p, y2);
        for (index_t i = 0; i < n - p; ++i) rhs[i] -= t12y2[i];
    }
    std::vector<S> y1 = trsv_sub(f.T, 0, 0, n - p, rhs);
    std::vector<S> y(n);
    std::copy(y1.begin(), y1.end(), y.begin());
    std::copy(y2.begin(), y2.end(), y.begin() + (n - p));
    return f.Q.apply(y, true);
}

} // namespace detail

// Correction triple (dr, dv, dx) of one refinement step.
template <typename S>
struct lse_correction {
    std::vector<S> dr, dv, dx;
};

// Solve the 3-block saddle system
//   [ I  0  A ] [ dr]   [f1]
//   [ 0  0  B ] [-dv] = [f2]
//   [A^T B^T 0] [ dx]   [f3]
// through the GRQ factors by the triangular cascade
//   u = Q f3, w = Z^T f1, R y2 = f2, T11^T q1 = u1,
//   T11 y1 = w1 - q1 - T12 y2, q2 = w2 - T22 y2,
//   dr = Z q, dx = Q^T y, R^T dv = T12^T q1 + T22^T q2 - u2.
template <typename S>
lse_correction<S> lse_correction_solve(const grq_factors<S>& f, const std::vector<S>& f1,
                                       const std::vector<S>& f2, const std::vector<S>& f3) {
    const index_t m = f.m, n = f.n, p = f.p;
    if (f1.size() != m || f2.size() != p || f3.size() != n)
        throw dimension_error("lse_correction_solve: rhs length mismatch");
    const index_t k = n - p; // size of the T11 block

    std::vector<S> u = f.Q.apply(f3);
    std::vector<S> w = f.Z.apply(f1, true);

    std::vector<S> y2 = trsv(f.R, f2);

    std::vector<S> u1(u.begin(), u.begin() + k);
    std::vector<S> q1 = trsv_sub(f.T, 0, 0, k, u1, true);

    std::vector<S> rhs(k);
    {
        auto t12y2 = gemv_sub(f.T, 0, k, k, p, y2);
        for (index_t i = 0; i < k; ++i) rhs[i] = w[i] - q1[i] - t12y2[i];
    }
    std::vector<S> y1 = trsv_sub(f.T, 0, 0, k, rhs);

    std::vector<S> q(m);
    std::copy(q1.begin(), q1.end(), q.begin());
    {
        auto t22y2 = gemv_sub(f.T, k, m - k, k, p, y2);
        for (index_t i = k; i < m; ++i) q[i] = w[i] - t22y2[i - k];
    }

    lse_correction<S> out;
    out.dr = f.Z.apply(q);
    std::vector<S> y(n);
    std::copy(y1.begin(), y1.end(), y.begin());
    std::copy(y2.begin(), y2.end(), y.begin() + k);
    out.dx = f.Q.apply(y, true);

    std::vector<S> s = gemv_sub(f.T, 0, k, k, p, q1, true);
    {
        std::vector<S> q2(q.begin() + k, q.end());
        auto t22q2 = gemv_sub(f.T, k, m - k, k, p, q2, true);
        for (index_t i = 0; i < p; ++i) s[i] += t22q2[i] - u[k + i];
    }
    out.dv = trsv(f.R, s, true);
    return out;
}

// Public direct solver: x by the null-space method, r and v recovered
// through the factors.
inline lse_state lse_direct(const grq_factors<double>& f, const std::vector<double>& b,
                            const std::vector<double>& d, bool with_multiplier = true) {
    lse_state st;
    st.x = detail::lse_direct_x(f, b, d);
    // r = b - Z T Q x
    auto qx = f.Q.apply(st.x);
    auto tqx = gemv(f.T, qx);
    f.Z.apply_in_place(tqx);
    st.r.resize(f.m);
    for (index_t i = 0; i < f.m; ++i) st.r[i] = b[i] - tqx[i];
    if (with_multiplier) {
        // R^T v = (Q A^T r)(n-p+1:n), and Q A^T r = T^T Z^T r
        auto ztr = f.Z.apply(st.r, true);
        auto ttz = gemv(f.T, ztr, true);
        std::vector<double> tail(ttz.begin() + (f.n - f.p), ttz.end());
        st.v = trsv(f.R, tail, true);
    } else {
        st.v.assign(f.p, 0.0);
    }
    return st;
}

// v from R^T v = (Q A^T r)(n-p+1:n), with A^T r accumulated at `level`
// and the orthogonal/triangular work at the factors' precision.
inline std::vector<double> solve_v(const grq_factors<float>& f, const dense_matrix<double>& A,
                                   const std::vector<double>& r, precision_level level) {
    auto g = gemv(A, r, true, level);
    const double s = detail::nonzero_or_one(max_abs(g));
    auto gf = detail::demote_with_scale(g, s);
    f.Q.apply_in_place(gf);
    std::vector<float> tail(gf.begin() + (f.n - f.p), gf.end());
    auto vf = trsv(f.R, tail, true);
    return detail::promote_with_scale(vf, s);
}

inline std::vector<double> solve_v(const grq_factors<double>& f, const dense_matrix<double>& A,
                                   const std::vector<double>& r, precision_level level) {
    auto g = gemv(A, r, true, level);
    f.Q.apply_in_place(g);
    std::vector<double> tail(g.begin() + (f.n - f.p), g.end());
    return trsv(f.R, tail, true);
}

struct lse_residual_vectors {
    std::vector<double> f1, f2, f3;
};

// f1 = b - r - A x, f2 = d - B x, f3 = -A^T r + B^T v, accumulated at
// `level` (extended fuses the additive terms into the double-double sums).
inline lse_residual_vectors lse_residuals(const lse_problem& pb, const lse_state& st,
                                          precision_level level) {
    const index_t m = pb.m(), n = pb.n(), p = pb.p();
    if (st.x.size() != n || st.r.size() != m || st.v.size() != p)
        throw dimension_error("lse_residuals: state length mismatch");
    lse_residual_vectors out;
    if (level != precision_level::extended()) {
        auto ax = gemv(pb.A, st.x);
        out.f1.resize(m);
        for (index_t i = 0; i < m; ++i) out.f1[i] = pb.b[i] - st.r[i] - ax[i];
        auto bx = gemv(pb.B, st.x);
        out.f2.resize(p);
        for (index_t i = 0; i < p; ++i) out.f2[i] = pb.d[i] - bx[i];
        auto atr = gemv(pb.A, st.r, true);
        auto btv = gemv(pb.B, st.v, true);
        out.f3.resize(n);
        for (index_t j = 0; j < n; ++j) out.f3[j] = btv[j] - atr[j];
        return out;
    }
    // double-double accumulation, column-major sweeps
    {
        std::vector<double> s(m), c(m, 0.0);
        for (index_t i = 0; i < m; ++i) {
            double e;
            detail::two_sum(pb.b[i], -st.r[i], s[i], e);
            c[i] = e;
        }
        for (index_t j = 0; j < n; ++j) {
            const double xj = st.x[j];
            const double* aj = pb.A.col(j);
            for (index_t i = 0; i < m; ++i) {
                double pr, pe, se;
                detail::two_prod(-aj[i], xj, pr, pe);
                detail::two_sum(s[i], pr, s[i], se);
                c[i] += se + pe;
            }
        }
        out.f1.resize(m);
        for (index_t i = 0; i < m; ++i) out.f1[i] = s[i] + c[i];
    }
    {
        std::vector<double> s(pb.d), c(p, 0.0);
        for (index_t j = 0; j < n; ++j) {
            const double xj = st.x[j];
            const double* bj = pb.B.col(j);
            for (index_t i = 0; i < p; ++i) {
                double pr, pe, se;
                detail::two_prod(-bj[i], xj, pr, pe);
                detail::two_sum(s[i], pr, s[i], se);
                c[i] += se + pe;
            }
        }
        out.f2.resize(p);
        for (index_t i = 0; i < p; ++i) out.f2[i] = s[i] + c[i];
    }
    {
        out.f3.resize(n);
        for (index_t j = 0; j < n; ++j) {
            double s = 0.0, c = 0.0;
            const double* aj = pb.A.col(j);
            for (index_t i = 0; i < m; ++i) {
                double pr, pe, se;
                detail::two_prod(-aj[i], st.r[i], pr, pe);
                detail::two_sum(s, pr, s, se);
                c += se + pe;
            }
            const double* bj = pb.B.col(j);
            for (index_t i = 0; i < p; ++i) {
                double pr, pe, se;
                detail::two_prod(bj[i], st.v[i], pr, pe);
                detail::two_sum(s, pr, s, se);
                c += se + pe;
            }
            out.f3[j] = s + c;
        }
    }
    return out;
}

struct lse_problem_norms {
    double b = 0.0, d = 0.0, A_fro = 0.0, B_fro = 0.0;
};

struct lse_state_norms {
    double r = 0.0, v = 0.0, x = 0.0;
};

// Stopping criteria (inclusive):
//   ||f1|| <= tol (||b|| + ||r|| + ||A||_F ||x||)
//   ||f2|| <= tol (||d|| + ||B||_F ||x||)
//   ||f3|| <= tol (||A||_F ||r|| + ||B||_F ||v||)
inline bool lse_stop_check(const residual_norms& f, const lse_problem_norms& pn,
                           const lse_state_norms& sn, double tol) {
    return f.f1 <= tol * (pn.b + sn.r + pn.A_fro * sn.x) &&
           f.f2 <= tol * (pn.d + pn.B_fro * sn.x) &&
           f.f3 <= tol * (pn.A_fro * sn.r + pn.B_fro * sn.v);
}

namespace detail {

inline double lse_scaled_residual_max(const residual_norms& f, const lse_problem_norms& pn,
                                      const lse_state_norms& sn) {
    auto ratio = [](double num, double den) {
        if (den > 0.0) return num / den;
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    };
    return std::max({ratio(f.f1, pn.b + sn.r + pn.A_fro * sn.x),
                     ratio(f.f2, pn.d + pn.B_fro * sn.x),
                     ratio(f.f3, pn.A_fro * sn.r + pn.B_fro * sn.v)});
}

} // namespace detail

struct mplse_result {
    lse_state state;
    refinement_trace trace;
};

// Four-precision classical iterative refinement (GRQ at u_f, residuals at
// u_r, correction cascade at u_s, updates at u). The problem is rescaled
// once so demotion cannot overflow; the scaling is unwound on output and
// leaves the stopping criteria unchanged.
inline mplse_result mplse(const lse_problem& pb, const refinement_config& cfg) {
    pb.validate();
    cfg.validate();
    const index_t m = pb.m(), n = pb.n(), p = pb.p();
    const bool low_factor = cfg.precisions.factor == precision_level::low();
    const bool low_solve = cfg.precisions.solve == precision_level::low();

    mplse_result out;
    refinement_trace& trace = out.trace;
    detail::stopwatch sw;

    // pre-scaled problem copy (identity scaling in the all-binary64 config)
    const double s_A = low_factor ? detail::nonzero_or_one(max_abs(pb.A)) : 1.0;
    const double s_B = low_factor ? detail::nonzero_or_one(max_abs(pb.B)) : 1.0;
    const double c_b = low_factor ? detail::nonzero_or_one(mixedls::max_abs(pb.b)) : 1.0;
    const double c_d = low_factor ? s_B * c_b / s_A : 1.0;
    lse_problem pr;
    pr.A = pb.A;
    pr.B = pb.B;
    if (low_factor) {
        for (double& x : pr.A.data()) x /= s_A;
        for (double& x : pr.B.data()) x /= s_B;
    }
    pr.b = detail::divide(pb.b, c_b);
    pr.d = detail::divide(pb.d, c_d);
    if (!all_finite(pr.d))
        throw invalid_input("mplse: rhs scaling overflowed (extreme norm imbalance)");
    trace.timing.other += sw.lap();

    // factorization at u_f
    grq_factors<float> Ff;
    grq_factors<double> Fd;
    dense_matrix<float> Af, Bf;
    if (low_factor) {
        Af = cast_matrix<float>(pr.A);
        Bf = cast_matrix<float>(pr.B);
        Ff = grq(Bf, Af);
        if (!low_solve) Fd = promote_factors(Ff);
    } else {
        Fd = grq(pr.B, pr.A);
    }
    trace.timing.factorization += sw.lap();

    // initial x, r at u_f; v per the driver's ordering (A^T r at u_r,
    // triangular work at u_f)
    std::vector<double> x, r, v;
    if (low_factor) {
        auto bf = cast_vector<float>(pr.b);
        auto df = cast_vector<float>(pr.d);
        auto xf = detail::lse_direct_x(Ff, bf, df);
        auto axf = gemv(Af, xf);
        std::vector<float> rf(m);
        for (index_t i = 0; i < m; ++i) rf[i] = bf[i] - axf[i];
        x = cast_vector<double>(xf);
        r = cast_vector<double>(rf);
        v = solve_v(Ff, pr.A, r, cfg.precisions.residual);
    } else {
        x = detail::lse_direct_x(Fd, pr.b, pr.d);
        auto ax = gemv(pr.A, x);
        r.resize(m);
        for (index_t i = 0; i < m; ++i) r[i] = pr.b[i] - ax[i];
        v = solve_v(Fd, pr.A, r, cfg.precisions.residual);
    }
    trace.timing.init += sw.lap();

    lse_problem_norms pn;
    pn.b = norm2(pr.b);
    pn.d = norm2(pr.d);
    pn.A_fro = norm_fro(pr.A);
    pn.B_fro = norm_fro(pr.B);
    trace.timing.other += sw.lap();

    detail::divergence_detector detector;
    lse_state st{x, r, v};
    for (index_t pass = 1; pass <= cfg.maxit; ++pass) {
        st.x = x;
        st.r = r;
        st.v = v;
        auto f = lse_residuals(pr, st, cfg.precisions.residual);
        residual_norms fn{norm2(f.f1), norm2(f.f2), norm2(f.f3)};
        lse_state_norms sn{norm2(r), norm2(v), norm2(x)};
        trace.residual_history.push_back(
            residual_norms{fn.f1 * c_b, fn.f2 * c_d, fn.f3 * s_A * c_b});
        trace.iterations = pass;
        trace.timing.residual += sw.lap();

        if (lse_stop_check(fn, pn, sn, cfg.tol)) {
            trace.status = refine_status::converged;
            break;
        }
        if (detector.diverged(detail::lse_scaled_residual_max(fn, pn, sn))) {
            trace.status = refine_status::diverged;
            break;
        }

        std::vector<double> dr, dv, dx;
        if (low_solve) {
            const double sigma = detail::common_scale(f.f1, f.f2, f.f3);
            auto corr = lse_correction_solve(Ff, detail::demote_with_scale(f.f1, sigma),
                                             detail::demote_with_scale(f.f2, sigma),
                                             detail::demote_with_scale(f.f3, sigma));
            dr = detail::promote_with_scale(corr.dr, sigma);
            dv = detail::promote_with_scale(corr.dv, sigma);
            dx = detail::promote_with_scale(corr.dx, sigma);
        } else {
            auto corr = lse_correction_solve(Fd, f.f1, f.f2, f.f3);
            dr = std::move(corr.dr);
            dv = std::move(corr.dv);
            dx = std::move(corr.dx);
        }
        for (index_t i = 0; i < m; ++i) r[i] += dr[i];
        for (index_t i = 0; i < p; ++i) v[i] += dv[i];
        for (index_t i = 0; i < n; ++i) x[i] += dx[i];
        trace.timing.correction += sw.lap();
        if (!all_finite(r) || !all_finite(v) || !all_finite(x)) {
            trace.status = refine_status::diverged;
            break;
        }
    }

    // unwind the pre-scaling
    out.state.x = scaled(x, c_b / s_A);
    out.state.r = scaled(r, c_b);
    out.state.v = scaled(v, s_A * c_b / s_B);
    trace.timing.other += sw.lap();
    return out;
}

} // namespace mixedls
