#pragma once
//
// Project     : mixedls
// Module      : mixedls/gls.hpp
// Description : generalized least squares: Paige's direct solver via GQR,
//               the correction-system cascade, and the four-precision
//               classical iterative refinement driver
//

#include "factor.hpp"
#include "refine.hpp"

namespace mixedls {

// min ||y||  s.t.  W x + V y = d, with rank(W) = m and rank([W, V]) = n
// assumed (not checked here).
struct gls_problem {
    dense_matrix<double> W; // n x m
    dense_matrix<double> V; // n x p
    std::vector<double> d;  // n

    index_t n() const { return W.rows(); }
    index_t m() const { return W.cols(); }
    index_t p() const { return V.cols(); }

    void validate() const {
        if (W.empty() || V.empty()) throw dimension_error("gls_problem: empty matrix");
        if (V.rows() != n()) throw dimension_error("gls_problem: W and V row counts differ");
        if (m() > n() || n() > m() + p())
            throw dimension_error("gls_problem: requires m <= n <= m + p");
        if (d.size() != n()) throw dimension_error("gls_problem: rhs length mismatch");
    }
};

struct gls_state {
    std::vector<double> x; // m
    std::vector<double> y; // p
    std::vector<double> z; // n, multiplier of the augmented system
};

namespace detail {

// Paige's solve through the GQR factors:
//   c = Q^T d,  T22 s2 = c2,  R x = c1 - T12 s2,  y = Z^T [0; s2]
// The T partition is T = [T11 T12; 0 T22] with T11 m x (p-n+m) and
// T22 (n-m) x (n-m) upper triangular.
template <typename S>
void gls_direct_xy(const gqr_factors<S>& f, const std::vector<S>& d, std::vector<S>& x,
                   std::vector<S>& y) {
    const index_t n = f.n, m = f.m, p = f.p;
    if (d.size() != n) throw dimension_error("gls_direct: rhs length mismatch");
    const index_t k = p - n + m; // column split of T
    std::vector<S> c = f.Q.apply(d, true);
    std::vector<S> c2(c.begin() + m, c.end());
    std::vector<S> s2 = trsv_sub(f.T, m, k, n - m, c2, false);
    std::vector<S> rhs(c.begin(), c.begin() + m);
    if (n > m) {
        auto t12s2 = gemv_sub(f.T, 0, m, k, n - m, s2);
        for (index_t i = 0; i < m; ++i) rhs[i] -= t12s2[i];
    }
    x = trsv(f.R, rhs);
    std::vector<S> s(p, S(0));
    std::copy(s2.begin(), s2.end(), s.begin() + k);
    y = f.Z.apply(s, true);
}

} // namespace detail

// z with W^T z = 0 and V^T z reproducing y (at the factors' precision):
//   T22^T v = (Z y)(p-n+m+1 : p),  z = Q [0; v]
template <typename S>
std::vector<S> init_z(const gqr_factors<S>& f, const std::vector<S>& y) {
    const index_t n = f.n, m = f.m, p = f.p;
    if (y.size() != p) throw dimension_error("init_z: y length mismatch");
    const index_t k = p - n + m;
    std::vector<S> g = f.Z.apply(y);
    std::vector<S> tail(g.begin() + k, g.end());
    std::vector<S> v = trsv_sub(f.T, m, k, n - m, tail, true);
    std::vector<S> zq(n, S(0));
    std::copy(v.begin(), v.end(), zq.begin() + m);
    return f.Q.apply(zq);
}

// Public direct solver returning the full augmented-state triple.
inline gls_state gls_direct(const gqr_factors<double>& f, const std::vector<double>& d,
                            bool with_multiplier = true) {
    gls_state st;
    detail::gls_direct_xy(f, d, st.x, st.y);
    st.z = with_multiplier ? init_z(f, st.y) : std::vector<double>(f.n, 0.0);
    return st;
}

template <typename S>
struct gls_correction {
    std::vector<S> dy, dz, dx;
};

// Solve the 3-block saddle system
//   [ I  V^T 0 ] [ dy]   [f1]
//   [ V   0  W ] [-dz] = [f2]
//   [ 0  W^T 0 ] [ dx]   [f3]
// through the GQR factors:
//   u = Q^T f2, w = Z f1, R^T h1 = f3, T22 g2 = u2,
//   T22^T h2 = w2 - g2 - T12^T h1, g1 = w1 - T11^T h1,
//   dy = Z^T g, dz = -Q h, R dx = u1 - T11 g1 - T12 g2.
template <typename S>
gls_correction<S> gls_correction_solve(const gqr_factors<S>& f, const std::vector<S>& f1,
                                       const std::vector<S>& f2, const std::vector<S>& f3) {
    const index_t n = f.n, m = f.m, p = f.p;
    if (f1.size() != p || f2.size() != n || f3.size() != m)
        throw dimension_error("gls_correction_solve: rhs length mismatch");
    const index_t k = p - n + m;

    std::vector<S> u = f.Q.apply(f2, true);
    std::vector<S> w = f.Z.apply(f1);

    std::vector<S> h1 = trsv(f.R, f3, true);

    std::vector<S> u2(u.begin() + m, u.end());
    std::vector<S> g2 = trsv_sub(f.T, m, k, n - m, u2, false);

    std::vector<S> rhs2(n - m);
    {
        auto t12th1 = gemv_sub(f.T, 0, m, k, n - m, h1, true);
        for (index_t i = 0; i < n - m; ++i) rhs2[i] = w[k + i] - g2[i] - t12th1[i];
    }
    std::vector<S> h2 = trsv_sub(f.T, m, k, n - m, rhs2, true);

    std::vector<S> g(p);
    {
        auto t11th1 = gemv_sub(f.T, 0, m, 0, k, h1, true);
        for (index_t i = 0; i < k; ++i) g[i] = w[i] - t11th1[i];
        std::copy(g2.begin(), g2.end(), g.begin() + k);
    }

    gls_correction<S> out;
    out.dy = f.Z.apply(g, true);

    std::vector<S> h(n);
    std::copy(h1.begin(), h1.end(), h.begin());
    std::copy(h2.begin(), h2.end(), h.begin() + m);
    out.dz = f.Q.apply(h);
    for (S& t : out.dz) t = -t;

    std::vector<S> rhs1(u.begin(), u.begin() + m);
    {
        std::vector<S> g1(g.begin(), g.begin() + k);
        auto t11g1 = gemv_sub(f.T, 0, m, 0, k, g1);
        auto t12g2 = gemv_sub(f.T, 0, m, k, n - m, g2);
        for (index_t i = 0; i < m; ++i) rhs1[i] -= t11g1[i] + t12g2[i];
    }
    out.dx = trsv(f.R, rhs1);
    return out;
}

struct gls_residual_vectors {
    std::vector<double> f1, f2, f3;
};

// f1 = -y + V^T z, f2 = d - W x - V y, f3 = W^T z
inline gls_residual_vectors gls_residuals(const gls_problem& pb, const gls_state& st,
                                          precision_level level) {
    const index_t n = pb.n(), m = pb.m(), p = pb.p();
    if (st.x.size() != m || st.y.size() != p || st.z.size() != n)
        throw dimension_error("gls_residuals: state length mismatch");
    gls_residual_vectors out;
    if (level != precision_level::extended()) {
        auto vtz = gemv(pb.V, st.z, true);
        out.f1.resize(p);
        for (index_t j = 0; j < p; ++j) out.f1[j] = vtz[j] - st.y[j];
        auto wx = gemv(pb.W, st.x);
        auto vy = gemv(pb.V, st.y);
        out.f2.resize(n);
        for (index_t i = 0; i < n; ++i) out.f2[i] = pb.d[i] - wx[i] - vy[i];
        out.f3 = gemv(pb.W, st.z, true);
        return out;
    }
    {
        out.f1.resize(p);
        for (index_t j = 0; j < p; ++j) {
            double s = -st.y[j], c = 0.0;
            const double* vj = pb.V.col(j);
            for (index_t i = 0; i < n; ++i) {
                double pr, pe, se;
                detail::two_prod(vj[i], st.z[i], pr, pe);
                detail::two_sum(s, pr, s, se);
                c += se + pe;
            }
            out.f1[j] = s + c;
        }
    }
    {
        std::vector<double> s(pb.d), c(n, 0.0);
        for (index_t j = 0; j < m; ++j) {
            const double xj = st.x[j];
            const double* wj = pb.W.col(j);
            for (index_t i = 0; i < n; ++i) {
                double pr, pe, se;
                detail::two_prod(-wj[i], xj, pr, pe);
                detail::two_sum(s[i], pr, s[i], se);
                c[i] += se + pe;
            }
        }
        for (index_t j = 0; j < p; ++j) {
            const double yj = st.y[j];
            const double* vj = pb.V.col(j);
            for (index_t i = 0; i < n; ++i) {
                double pr, pe, se;
                detail::two_prod(-vj[i], yj, pr, pe);
                detail::two_sum(s[i], pr, s[i], se);
                c[i] += se + pe;
            }
        }
        out.f2.resize(n);
        for (index_t i = 0; i < n; ++i) out.f2[i] = s[i] + c[i];
    }
    {
        out.f3.resize(m);
        for (index_t j = 0; j < m; ++j) {
            double s = 0.0, c = 0.0;
            const double* wj = pb.W.col(j);
            for (index_t i = 0; i < n; ++i) {
                double pr, pe, se;
                detail::two_prod(wj[i], st.z[i], pr, pe);
                detail::two_sum(s, pr, s, se);
                c += se + pe;
            }
            out.f3[j] = s + c;
        }
    }
    return out;
}

struct gls_problem_norms {
    double d = 0.0, W_fro = 0.0, V_fro = 0.0;
};

struct gls_state_norms {
    double x = 0.0, y = 0.0, z = 0.0;
};

// Stopping criteria (inclusive):
//   ||f1|| <= tol (||y|| + ||V||_F ||z||)
//   ||f2|| <= tol (||d|| + ||W||_F ||x|| + ||V||_F ||y||)
//   ||f3|| <= tol ||W||_F ||z||
inline bool gls_stop_check(const residual_norms& f, const gls_problem_norms& pn,
                           const gls_state_norms& sn, double tol) {
    return f.f1 <= tol * (sn.y + pn.V_fro * sn.z) &&
           f.f2 <= tol * (pn.d + pn.W_fro * sn.x + pn.V_fro * sn.y) &&
           f.f3 <= tol * pn.W_fro * sn.z;
}

namespace detail {

inline double gls_scaled_residual_max(const residual_norms& f, const gls_problem_norms& pn,
                                      const gls_state_norms& sn) {
    auto ratio = [](double num, double den) {
        if (den > 0.0) return num / den;
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    };
    return std::max({ratio(f.f1, sn.y + pn.V_fro * sn.z),
                     ratio(f.f2, pn.d + pn.W_fro * sn.x + pn.V_fro * sn.y),
                     ratio(f.f3, pn.W_fro * sn.z)});
}

} // namespace detail

struct mpgls_result {
    gls_state state;
    refinement_trace trace;
};

// Four-precision classical iterative refinement for GLS (GQR at u_f,
// residuals at u_r, cascade at u_s, updates at u). Pre-scaled like mplse;
// for GLS the three scalings are independent.
inline mpgls_result mpgls(const gls_problem& pb, const refinement_config& cfg) {
    pb.validate();
    cfg.validate();
    const index_t n = pb.n(), m = pb.m(), p = pb.p();
    const bool low_factor = cfg.precisions.factor == precision_level::low();
    const bool low_solve = cfg.precisions.solve == precision_level::low();

    mpgls_result out;
    refinement_trace& trace = out.trace;
    detail::stopwatch sw;

    const double s_W = low_factor ? detail::nonzero_or_one(max_abs(pb.W)) : 1.0;
    const double s_V = low_factor ? detail::nonzero_or_one(max_abs(pb.V)) : 1.0;
    const double c_d = low_factor ? detail::nonzero_or_one(mixedls::max_abs(pb.d)) : 1.0;
    gls_problem pr;
    pr.W = pb.W;
    pr.V = pb.V;
    if (low_factor) {
        for (double& x : pr.W.data()) x /= s_W;
        for (double& x : pr.V.data()) x /= s_V;
    }
    pr.d = detail::divide(pb.d, c_d);
    trace.timing.other += sw.lap();

    gqr_factors<float> Ff;
    gqr_factors<double> Fd;
    dense_matrix<float> Wf, Vf;
    if (low_factor) {
        Wf = cast_matrix<float>(pr.W);
        Vf = cast_matrix<float>(pr.V);
        Ff = gqr(Wf, Vf);
        if (!low_solve) Fd = promote_factors(Ff);
    } else {
        Fd = gqr(pr.W, pr.V);
    }
    trace.timing.factorization += sw.lap();

    std::vector<double> x, y, z;
    if (low_factor) {
        auto df = cast_vector<float>(pr.d);
        std::vector<float> xf, yf;
        detail::gls_direct_xy(Ff, df, xf, yf);
        auto zf = init_z(Ff, yf);
        x = cast_vector<double>(xf);
        y = cast_vector<double>(yf);
        z = cast_vector<double>(zf);
    } else {
        detail::gls_direct_xy(Fd, pr.d, x, y);
        z = init_z(Fd, y);
    }
    trace.timing.init += sw.lap();

    gls_problem_norms pn;
    pn.d = norm2(pr.d);
    pn.W_fro = norm_fro(pr.W);
    pn.V_fro = norm_fro(pr.V);
    trace.timing.other += sw.lap();

    detail::divergence_detector detector;
    gls_state st;
    for (index_t pass = 1; pass <= cfg.maxit; ++pass) {
        st.x = x;
        st.y = y;
        st.z = z;
        auto f = gls_residuals(pr, st, cfg.precisions.residual);
        residual_norms fn{norm2(f.f1), norm2(f.f2), norm2(f.f3)};
        gls_state_norms sn{norm2(x), norm2(y), norm2(z)};
        trace.residual_history.push_back(
            residual_norms{fn.f1 * c_d / s_V, fn.f2 * c_d, fn.f3 * s_W * c_d / (s_V * s_V)});
        trace.iterations = pass;
        trace.timing.residual += sw.lap();

        if (gls_stop_check(fn, pn, sn, cfg.tol)) {
            trace.status = refine_status::converged;
            break;
        }
        if (detector.diverged(detail::gls_scaled_residual_max(fn, pn, sn))) {
            trace.status = refine_status::diverged;
            break;
        }

        std::vector<double> dy, dz, dx;
        if (low_solve) {
            const double sigma = detail::common_scale(f.f1, f.f2, f.f3);
            auto corr = gls_correction_solve(Ff, detail::demote_with_scale(f.f1, sigma),
                                             detail::demote_with_scale(f.f2, sigma),
                                             detail::demote_with_scale(f.f3, sigma));
            dy = detail::promote_with_scale(corr.dy, sigma);
            dz = detail::promote_with_scale(corr.dz, sigma);
            dx = detail::promote_with_scale(corr.dx, sigma);
        } else {
            auto corr = gls_correction_solve(Fd, f.f1, f.f2, f.f3);
            dy = std::move(corr.dy);
            dz = std::move(corr.dz);
            dx = std::move(corr.dx);
        }
        for (index_t i = 0; i < m; ++i) x[i] += dx[i];
        for (index_t i = 0; i < p; ++i) y[i] += dy[i];
        for (index_t i = 0; i < n; ++i) z[i] += dz[i];
        trace.timing.correction += sw.lap();
        if (!all_finite(x) || !all_finite(y) || !all_finite(z)) {
            trace.status = refine_status::diverged;
            break;
        }
    }

    out.state.x = scaled(x, c_d / s_W);
    out.state.y = scaled(y, c_d / s_V);
    out.state.z = scaled(z, c_d / (s_V * s_V));
    trace.timing.other += sw.lap();
    return out;
}

} // namespace mixedls
