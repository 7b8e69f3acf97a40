#pragma once
//
// Project     : mixedls
// Module      : mixedls/generate.hpp
// Description : condition-number-controlled test problem generator: the
//               stacked matrix is built as Q1 * Sigma * Q2 with orthogonal
//               factors from QR of seeded Gaussian matrices
//

#include "gls.hpp"
#include "krylov.hpp"
#include "lse.hpp"
#include "random.hpp"

namespace mixedls {

enum class sv_distribution { geometric, arithmetic };

inline const char* to_string(sv_distribution d) {
    return d == sv_distribution::geometric ? "geometric" : "arithmetic";
}

struct generator_spec {
    problem_kind kind = problem_kind::lse;
    index_t m = 0, n = 0, p = 0; // LSE: A m x n, B p x n; GLS: W n x m, V n x p
    double cond = 1.0;
    std::uint64_t seed = 0;
    sv_distribution distribution = sv_distribution::geometric;

    void validate() const {
        if (!(cond >= 1.0)) throw invalid_input("generator_spec: cond must be >= 1");
        if (m == 0 || n == 0 || p == 0) throw dimension_error("generator_spec: zero dimension");
        if (kind == problem_kind::lse) {
            if (p > n || n > m + p)
                throw dimension_error("generator_spec: LSE requires p <= n <= m + p");
        } else {
            if (m > n || n > m + p)
                throw dimension_error("generator_spec: GLS requires m <= n <= m + p");
        }
    }
};

namespace detail {

// sigma_1 = 1 down to sigma_k = 1/cond
inline std::vector<double> singular_profile(index_t k, double cond, sv_distribution dist) {
    std::vector<double> s(k, 1.0);
    if (k == 1) return s;
    for (index_t i = 0; i < k; ++i) {
        const double t = double(i) / double(k - 1);
        s[i] = dist == sv_distribution::geometric ? std::pow(cond, -t)
                                                  : 1.0 - (1.0 - 1.0 / cond) * t;
    }
    return s;
}

} // namespace detail

// [A; B] = Q1 Sigma Q2 split by rows; b, d seeded Gaussian.
inline lse_problem gen_lse_problem(const generator_spec& gs) {
    gs.validate();
    if (gs.kind != problem_kind::lse) throw invalid_input("gen_lse_problem: spec kind is not LSE");
    const index_t m = gs.m, n = gs.n, p = gs.p;
    rng_engine rng(gs.seed);
    auto q1 = qr(gaussian_matrix(m + p, n, rng));
    auto q2 = qr(gaussian_matrix(n, n, rng));
    auto sv = detail::singular_profile(n, gs.cond, gs.distribution);
    dense_matrix<double> S(m + p, n);
    for (index_t i = 0; i < n; ++i) S(i, i) = sv[i];
    q2.Q.apply_right(S);
    q1.Q.apply_left(S);
    lse_problem pb;
    pb.A = dense_matrix<double>(m, n);
    pb.B = dense_matrix<double>(p, n);
    for (index_t j = 0; j < n; ++j) {
        for (index_t i = 0; i < m; ++i) pb.A(i, j) = S(i, j);
        for (index_t i = 0; i < p; ++i) pb.B(i, j) = S(m + i, j);
    }
    pb.b = gaussian_vector(m, rng);
    pb.d = gaussian_vector(p, rng);
    return pb;
}

// [W, V] = Q1 Sigma Q2 split by columns; d seeded Gaussian.
inline gls_problem gen_gls_problem(const generator_spec& gs) {
    gs.validate();
    if (gs.kind != problem_kind::gls) throw invalid_input("gen_gls_problem: spec kind is not GLS");
    const index_t n = gs.n, m = gs.m, p = gs.p;
    rng_engine rng(gs.seed);
    auto q1 = qr(gaussian_matrix(n, n, rng));
    auto q2 = qr(gaussian_matrix(m + p, n, rng));
    auto sv = detail::singular_profile(n, gs.cond, gs.distribution);
    dense_matrix<double> S(n, m + p);
    for (index_t i = 0; i < n; ++i) S(i, i) = sv[i];
    q2.Q.apply_right(S, true);
    q1.Q.apply_left(S);
    gls_problem pb;
    pb.W = dense_matrix<double>(n, m);
    pb.V = dense_matrix<double>(n, p);
    for (index_t i = 0; i < n; ++i) {
        for (index_t j = 0; j < m; ++j) pb.W(i, j) = S(i, j);
        for (index_t j = 0; j < p; ++j) pb.V(i, j) = S(i, m + j);
    }
    pb.d = gaussian_vector(n, rng);
    return pb;
}

} // namespace mixedls
