#pragma once
//
// Project     : mixedls
// Module      : mixedls/householder.hpp
// Description : compact Householder reflector products and the unblocked
//               QR / RQ factorizations
//

#include <cmath>
#include <vector>

#include "matrix.hpp"

namespace mixedls {

// One elementary reflector H = I - tau v v^T acting on the index window
// [offset, offset + v.size()). The unit entry of v is stored explicitly.
template <typename S>
struct reflector {
    index_t offset = 0;
    std::vector<S> v;
    S tau = S(0);
};

namespace detail {

// Reflector mapping (alpha, x) -> (beta, 0). `unit_last` selects the RQ
// layout where the unit entry sits at the end of v instead of the front.
// Mirrors xLARFG: tau = 0 (H = I) when x is already zero.
template <typename S>
S make_reflector(S alpha, const S* x, index_t len_x, bool unit_last, reflector<S>& out) {
    double xnorm = 0.0;
    for (index_t i = 0; i < len_x; ++i) xnorm += double(x[i]) * double(x[i]);
    xnorm = std::sqrt(xnorm);
    out.v.assign(len_x + 1, S(0));
    if (xnorm == 0.0) {
        out.tau = S(0);
        out.v[unit_last ? len_x : 0] = S(1);
        return alpha;
    }
    const double a = double(alpha);
    const double beta = -std::copysign(std::hypot(a, xnorm), a);
    out.tau = static_cast<S>((beta - a) / beta);
    const S inv = static_cast<S>(1.0 / (a - beta));
    if (unit_last) {
        for (index_t i = 0; i < len_x; ++i) out.v[i] = x[i] * inv;
        out.v[len_x] = S(1);
    } else {
        out.v[0] = S(1);
        for (index_t i = 0; i < len_x; ++i) out.v[i + 1] = x[i] * inv;
    }
    return static_cast<S>(beta);
}

template <typename S>
void reflect_vector(const reflector<S>& h, std::vector<S>& x) {
    if (h.tau == S(0)) return;
    const index_t len = h.v.size();
    S s = S(0);
    for (index_t i = 0; i < len; ++i) s += h.v[i] * x[h.offset + i];
    s *= h.tau;
    for (index_t i = 0; i < len; ++i) x[h.offset + i] -= s * h.v[i];
}

// A := A (I - tau v v^T), restricted to rows [0, row_end).
template <typename S>
void reflect_matrix_right(const reflector<S>& h, dense_matrix<S>& A, index_t row_end) {
    if (h.tau == S(0)) return;
    const index_t len = h.v.size();
    std::vector<S> w(row_end, S(0));
    for (index_t j = 0; j < len; ++j) {
        const S vj = h.v[j];
        const S* aj = A.col(h.offset + j);
        for (index_t i = 0; i < row_end; ++i) w[i] += vj * aj[i];
    }
    for (index_t j = 0; j < len; ++j) {
        const S tvj = h.tau * h.v[j];
        S* aj = A.col(h.offset + j);
        for (index_t i = 0; i < row_end; ++i) aj[i] -= tvj * w[i];
    }
}

// A := (I - tau v v^T) A, restricted to columns [col_begin, cols).
template <typename S>
void reflect_matrix_left(const reflector<S>& h, dense_matrix<S>& A, index_t col_begin) {
    if (h.tau == S(0)) return;
    const index_t len = h.v.size();
    for (index_t j = col_begin; j < A.cols(); ++j) {
        S* aj = A.col(j);
        S s = S(0);
        for (index_t i = 0; i < len; ++i) s += h.v[i] * aj[h.offset + i];
        s *= h.tau;
        for (index_t i = 0; i < len; ++i) aj[h.offset + i] -= s * h.v[i];
    }
}

} // namespace detail

// Product of elementary reflectors Q = H_0 H_1 ... H_{k-1}, stored
// compactly. Immutable after construction; never densified by solvers.
template <typename S>
class householder_factor {
public:
    householder_factor() = default;
    householder_factor(index_t dim, std::vector<reflector<S>> refl)
        : dim_(dim), refl_(std::move(refl)) {}

    static householder_factor identity(index_t dim) { return householder_factor(dim, {}); }

    index_t dim() const { return dim_; }
    index_t count() const { return refl_.size(); }
    const std::vector<reflector<S>>& reflectors() const { return refl_; }

    // y = Q x (or Q^T x)
    std::vector<S> apply(const std::vector<S>& x, bool transpose = false) const {
        if (x.size() != dim_) throw dimension_error("householder_factor: vector length mismatch");
        std::vector<S> y = x;
        apply_in_place(y, transpose);
        return y;
    }

    void apply_in_place(std::vector<S>& x, bool transpose = false) const {
        const index_t k = refl_.size();
        if (!transpose) {
            for (index_t j = k; j-- > 0;) detail::reflect_vector(refl_[j], x);
        } else {
            for (index_t j = 0; j < k; ++j) detail::reflect_vector(refl_[j], x);
        }
    }

    // A := Q A (or Q^T A)
    void apply_left(dense_matrix<S>& A, bool transpose = false) const {
        if (A.rows() != dim_) throw dimension_error("householder_factor: row count mismatch");
        const index_t k = refl_.size();
        if (!transpose) {
            for (index_t j = k; j-- > 0;) detail::reflect_matrix_left(refl_[j], A, 0);
        } else {
            for (index_t j = 0; j < k; ++j) detail::reflect_matrix_left(refl_[j], A, 0);
        }
    }

    // A := A Q (or A Q^T)
    void apply_right(dense_matrix<S>& A, bool transpose = false) const {
        if (A.cols() != dim_) throw dimension_error("householder_factor: column count mismatch");
        const index_t k = refl_.size();
        if (!transpose) {
            for (index_t j = 0; j < k; ++j) detail::reflect_matrix_right(refl_[j], A, A.rows());
        } else {
            for (index_t j = k; j-- > 0;) detail::reflect_matrix_right(refl_[j], A, A.rows());
        }
    }

private:
    index_t dim_ = 0;
    std::vector<reflector<S>> refl_;
};

// Explicit dense Q; test/validation utility only.
template <typename S>
dense_matrix<S> dense_orthogonal(const householder_factor<S>& Q) {
    dense_matrix<S> M = dense_matrix<S>::identity(Q.dim());
    Q.apply_left(M);
    return M;
}

template <typename S>
struct qr_result {
    householder_factor<S> Q; // rows-dim
    dense_matrix<S> R;       // rows x cols upper trapezoidal
};

// Unblocked Householder QR, A = Q R (xGEQR2 layout).
template <typename S>
qr_result<S> qr(dense_matrix<S> A) {
    const index_t m = A.rows(), n = A.cols();
    if (m == 0 || n == 0) throw dimension_error("qr: empty matrix");
    const index_t k = std::min(m, n);
    std::vector<reflector<S>> refl(k);
    std::vector<S> xbuf;
    for (index_t j = 0; j < k; ++j) {
        reflector<S>& h = refl[j];
        h.offset = j;
        xbuf.assign(A.col(j) + j + 1, A.col(j) + m);
        const S beta = detail::make_reflector(A(j, j), xbuf.data(), m - j - 1, false, h);
        detail::reflect_matrix_left(h, A, j + 1);
        A(j, j) = beta;
        for (index_t i = j + 1; i < m; ++i) A(i, j) = S(0);
    }
    return {householder_factor<S>(m, std::move(refl)), std::move(A)};
}

namespace detail {

template <typename S>
struct rq_any_result {
    dense_matrix<S> R;       // rows x cols, upper trapezoidal in the RQ sense
    householder_factor<S> Q; // cols-dim
};

// Unblocked Householder RQ for any shape (xGERQ2 layout): rows are
// eliminated bottom-up with reflectors applied from the right.
template <typename S>
rq_any_result<S> rq_any(dense_matrix<S> M) {
    const index_t r = M.rows(), c = M.cols();
    if (r == 0 || c == 0) throw dimension_error("rq: empty matrix");
    const index_t k = std::min(r, c);
    std::vector<reflector<S>> refl(k);
    std::vector<S> xbuf(c);
    for (index_t j = k; j-- > 0;) {
        const index_t row = r - k + j;
        const index_t pcol = c - k + j; // pivot column
        reflector<S>& h = refl[j];
        h.offset = 0;
        xbuf.resize(pcol);
        for (index_t t = 0; t < pcol; ++t) xbuf[t] = M(row, t);
        const S beta = detail::make_reflector(M(row, pcol), xbuf.data(), pcol, true, h);
        detail::reflect_matrix_right(h, M, row);
        M(row, pcol) = beta;
        for (index_t t = 0; t < pcol; ++t) M(row, t) = S(0);
    }
    return {std::move(M), householder_factor<S>(c, std::move(refl))};
}

} // namespace detail

template <typename S>
struct rq_result {
    dense_matrix<S> R;       // rows x rows upper triangular
    householder_factor<S> Q; // cols-dim
};

// Householder RQ of a wide matrix, B = [0, R] Q with R square.
template <typename S>
rq_result<S> rq(const dense_matrix<S>& B) {
    const index_t p = B.rows(), n = B.cols();
    if (p == 0 || n == 0) throw dimension_error("rq: empty matrix");
    if (p > n) throw dimension_error("rq: requires rows <= cols");
    auto full = detail::rq_any(B);
    dense_matrix<S> R(p, p);
    for (index_t j = 0; j < p; ++j)
        for (index_t i = 0; i <= j; ++i) R(i, j) = full.R(i, n - p + j);
    return {std::move(R), std::move(full.Q)};
}

} // namespace mixedls
