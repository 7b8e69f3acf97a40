#pragma once
//
// Project     : mixedls
// Module      : mixedls/factor.hpp
// Description : generalized RQ and QR factorizations sharing one
//               orthogonal factor, as used by the LSE/GLS solvers
//

#include "householder.hpp"

namespace mixedls {

// B = [0, R] Q and A = Z T Q with shared n-dim Q.
template <typename S>
struct grq_factors {
    index_t m = 0, n = 0, p = 0;
    householder_factor<S> Q; // n-dim, from RQ of B
    dense_matrix<S> R;       // p x p upper triangular
    householder_factor<S> Z; // m-dim, from QR of A Q^T
    dense_matrix<S> T;       // m x n upper trapezoidal
};

// W = Q [R; 0] and V = Q T Z with shared n-dim Q.
template <typename S>
struct gqr_factors {
    index_t n = 0, m = 0, p = 0;
    householder_factor<S> Q; // n-dim, from QR of W
    dense_matrix<S> R;       // m x m upper triangular
    householder_factor<S> Z; // p-dim, from RQ of Q^T V
    dense_matrix<S> T;       // n x p
};

// GRQ of (B, A): RQ-factorize B, then QR-factorize A Q^T.
template <typename S>
grq_factors<S> grq(const dense_matrix<S>& B, const dense_matrix<S>& A) {
    const index_t p = B.rows(), n = B.cols(), m = A.rows();
    if (A.cols() != n) throw dimension_error("grq: A and B must share the column count");
    if (p > n || n > m + p) throw dimension_error("grq: requires p <= n <= m + p");
    grq_factors<S> f;
    f.m = m;
    f.n = n;
    f.p = p;
    auto bq = rq(B);
    f.Q = std::move(bq.Q);
    f.R = std::move(bq.R);
    dense_matrix<S> C = A;
    f.Q.apply_right(C, /*transpose=*/true);
    auto aq = qr(std::move(C));
    f.Z = std::move(aq.Q);
    f.T = std::move(aq.R);
    return f;
}

// GQR of (W, V): QR-factorize W, then RQ-factorize Q^T V.
template <typename S>
gqr_factors<S> gqr(const dense_matrix<S>& W, const dense_matrix<S>& V) {
    const index_t n = W.rows(), m = W.cols(), p = V.cols();
    if (V.rows() != n) throw dimension_error("gqr: W and V must share the row count");
    if (m > n || n > m + p) throw dimension_error("gqr: requires m <= n <= m + p");
    gqr_factors<S> f;
    f.n = n;
    f.m = m;
    f.p = p;
    auto wq = qr(W);
    f.Q = std::move(wq.Q);
    f.R = dense_matrix<S>(m, m);
    for (index_t j = 0; j < m; ++j)
        for (index_t i = 0; i <= j; ++i) f.R(i, j) = wq.R(i, j);
    dense_matrix<S> C = V;
    f.Q.apply_left(C, /*transpose=*/true);
    auto cz = detail::rq_any(std::move(C));
    f.T = std::move(cz.R);
    f.Z = std::move(cz.Q);
    return f;
}

// ---- promotion to binary64 (GMRES paths run the factors at working) ----

template <typename To, typename From>
householder_factor<To> cast_factor(const householder_factor<From>& Q) {
    std::vector<reflector<To>> refl(Q.count());
    for (index_t j = 0; j < Q.count(); ++j) {
        refl[j].offset = Q.reflectors()[j].offset;
        refl[j].tau = static_cast<To>(Q.reflectors()[j].tau);
        refl[j].v = cast_vector<To>(Q.reflectors()[j].v);
    }
    return householder_factor<To>(Q.dim(), std::move(refl));
}

inline grq_factors<double> promote_factors(const grq_factors<float>& f) {
    grq_factors<double> g;
    g.m = f.m;
    g.n = f.n;
    g.p = f.p;
    g.Q = cast_factor<double>(f.Q);
    g.R = cast_matrix<double>(f.R);
    g.Z = cast_factor<double>(f.Z);
    g.T = cast_matrix<double>(f.T);
    return g;
}

inline gqr_factors<double> promote_factors(const gqr_factors<float>& f) {
    gqr_factors<double> g;
    g.n = f.n;
    g.m = f.m;
    g.p = f.p;
    g.Q = cast_factor<double>(f.Q);
    g.R = cast_matrix<double>(f.R);
    g.Z = cast_factor<double>(f.Z);
    g.T = cast_matrix<double>(f.T);
    return g;
}

} // namespace mixedls
