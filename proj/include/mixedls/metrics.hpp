#pragma once
//
// Project     : mixedls
// Module      : mixedls/metrics.hpp
// Description : the accuracy metrics reported by the benchmark tables
//

#include "gls.hpp"
#include "lse.hpp"

namespace mixedls {

namespace detail {

inline double safe_ratio(double num, double den) {
    if (den > 0.0) return num / den;
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

} // namespace detail

// err-1 = ||B x - d|| / (||B||_F ||x|| + ||d||)
inline double metric_err1_lse(const lse_problem& pb, const std::vector<double>& x) {
    auto bx = gemv(pb.B, x);
    double num = 0.0;
    for (index_t i = 0; i < pb.p(); ++i) num += (bx[i] - pb.d[i]) * (bx[i] - pb.d[i]);
    return detail::safe_ratio(std::sqrt(num), norm_fro(pb.B) * norm2(x) + norm2(pb.d));
}

// err-2 = | ||A x - b|| / ||A x_ref - b|| - 1 |
inline double metric_err2_lse(const lse_problem& pb, const std::vector<double>& x,
                              const std::vector<double>& x_ref) {
    auto ax = gemv(pb.A, x);
    auto axr = gemv(pb.A, x_ref);
    double num = 0.0, den = 0.0;
    for (index_t i = 0; i < pb.m(); ++i) {
        num += (ax[i] - pb.b[i]) * (ax[i] - pb.b[i]);
        den += (axr[i] - pb.b[i]) * (axr[i] - pb.b[i]);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(std::sqrt(num / den) - 1.0);
}

// er-1 = ||W x + V y - d|| / (||W||_F ||x|| + ||V||_F ||y|| + ||d||)
inline double metric_er1_gls(const gls_problem& pb, const std::vector<double>& x,
                             const std::vector<double>& y) {
    auto wx = gemv(pb.W, x);
    auto vy = gemv(pb.V, y);
    double num = 0.0;
    for (index_t i = 0; i < pb.n(); ++i) {
        const double t = wx[i] + vy[i] - pb.d[i];
        num += t * t;
    }
    return detail::safe_ratio(std::sqrt(num), norm_fro(pb.W) * norm2(x) +
                                                  norm_fro(pb.V) * norm2(y) + norm2(pb.d));
}

// er-2 = | ||y|| / ||y_ref|| - 1 |
inline double metric_er2_gls(const std::vector<double>& y, const std::vector<double>& y_ref) {
    const double den = norm2(y_ref);
    const double num = norm2(y);
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(num / den - 1.0);
}

} // namespace mixedls
