#pragma once
//
// Project     : mixedls
// Module      : mixedls/matrix.hpp
// Description : column-major dense matrices and the BLAS-level kernels
//               (gemv, gemm, trsv, norms) the solvers are built on
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "precision.hpp"

namespace mixedls {

using index_t = std::size_t;

template <typename S>
class dense_matrix {
public:
    dense_matrix() = default;
    dense_matrix(index_t rows, index_t cols) : rows_(rows), cols_(cols), data_(rows * cols, S(0)) {}

    index_t rows() const { return rows_; }
    index_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    S& operator()(index_t i, index_t j) { return data_[j * rows_ + i]; }
    const S& operator()(index_t i, index_t j) const { return data_[j * rows_ + i]; }

    S* col(index_t j) { return data_.data() + j * rows_; }
    const S* col(index_t j) const { return data_.data() + j * rows_; }

    std::vector<S>& data() { return data_; }
    const std::vector<S>& data() const { return data_; }

    static dense_matrix identity(index_t n) {
        dense_matrix I(n, n);
        for (index_t i = 0; i < n; ++i) I(i, i) = S(1);
        return I;
    }

private:
    index_t rows_ = 0;
    index_t cols_ = 0;
    std::vector<S> data_;
};

// ---- vector kernels --------------------------------------------------

template <typename S>
S dot(const std::vector<S>& x, const std::vector<S>& y) {
    S s = S(0);
    for (index_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

template <typename S>
double norm2(const std::vector<S>& v) {
    double s = 0.0;
    for (S x : v) s += double(x) * double(x);
    return std::sqrt(s);
}

template <typename S>
void axpy(std::vector<S>& y, S alpha, const std::vector<S>& x) {
    for (index_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

template <typename S>
std::vector<S> scaled(const std::vector<S>& x, S alpha) {
    std::vector<S> y(x.size());
    for (index_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
    return y;
}

template <typename To, typename From>
std::vector<To> cast_vector(const std::vector<From>& v) {
    std::vector<To> out(v.size());
    for (index_t i = 0; i < v.size(); ++i) out[i] = static_cast<To>(v[i]);
    return out;
}

template <typename S>
bool all_finite(const std::vector<S>& v) {
    for (S x : v)
        if (!std::isfinite(double(x))) return false;
    return true;
}

// ---- matrix utilities ------------------------------------------------

template <typename S>
double norm_fro(const dense_matrix<S>& A) {
    double s = 0.0;
    for (S x : A.data()) s += double(x) * double(x);
    return std::sqrt(s);
}

template <typename S>
double max_abs(const dense_matrix<S>& A) {
    double m = 0.0;
    for (S x : A.data()) m = std::max(m, std::abs(double(x)));
    return m;
}

template <typename To, typename From>
dense_matrix<To> cast_matrix(const dense_matrix<From>& A) {
    dense_matrix<To> B(A.rows(), A.cols());
    for (index_t k = 0; k < A.data().size(); ++k) B.data()[k] = static_cast<To>(A.data()[k]);
    return B;
}

template <typename S>
dense_matrix<S> transpose(const dense_matrix<S>& A) {
    dense_matrix<S> B(A.cols(), A.rows());
    for (index_t j = 0; j < A.cols(); ++j)
        for (index_t i = 0; i < A.rows(); ++i) B(j, i) = A(i, j);
    return B;
}

template <typename S>
void scale_in_place(dense_matrix<S>& A, S alpha) {
    for (S& x : A.data()) x *= alpha;
}

// ---- gemv ------------------------------------------------------------

// y = A x  (or A^T x). Accumulation happens in the scalar type S.
template <typename S>
std::vector<S> gemv(const dense_matrix<S>& A, const std::vector<S>& x, bool transpose = false) {
    if (!transpose) {
        if (x.size() != A.cols()) throw dimension_error("gemv: x length != cols");
        std::vector<S> y(A.rows(), S(0));
        for (index_t j = 0; j < A.cols(); ++j) {
            const S xj = x[j];
            const S* aj = A.col(j);
            for (index_t i = 0; i < A.rows(); ++i) y[i] += xj * aj[i];
        }
        return y;
    }
    if (x.size() != A.rows()) throw dimension_error("gemv: x length != rows");
    std::vector<S> y(A.cols(), S(0));
    for (index_t j = 0; j < A.cols(); ++j) {
        const S* aj = A.col(j);
        S s = S(0);
        for (index_t i = 0; i < A.rows(); ++i) s += aj[i] * x[i];
        y[j] = s;
    }
    return y;
}

// y = A x (or A^T x) with double-double inner products.
inline std::vector<double> gemv_extended(const dense_matrix<double>& A, const std::vector<double>& x,
                                         bool transpose = false) {
    if (!transpose) {
        if (x.size() != A.cols()) throw dimension_error("gemv: x length != cols");
        std::vector<double> y(A.rows());
        for (index_t i = 0; i < A.rows(); ++i)
            y[i] = extended_dot_strided(&A(i, 0), A.rows(), x.data(), A.cols());
        return y;
    }
    if (x.size() != A.rows()) throw dimension_error("gemv: x length != rows");
    std::vector<double> y(A.cols());
    for (index_t j = 0; j < A.cols(); ++j) y[j] = extended_dot(A.col(j), x.data(), A.rows());
    return y;
}

// Dispatch on the requested accumulation level; `extended` is only
// meaningful for binary64 matrices.
inline std::vector<double> gemv(const dense_matrix<double>& A, const std::vector<double>& x,
                                bool transpose, precision_level accumulation) {
    if (accumulation == precision_level::extended()) return gemv_extended(A, x, transpose);
    return gemv<double>(A, x, transpose);
}

// ---- gemm (plain jki loop; used by the generator and oracles) ---------

template <typename S>
dense_matrix<S> gemm(const dense_matrix<S>& A, const dense_matrix<S>& B) {
    if (A.cols() != B.rows()) throw dimension_error("gemm: inner dimensions differ");
    dense_matrix<S> C(A.rows(), B.cols());
    for (index_t j = 0; j < B.cols(); ++j) {
        S* cj = C.col(j);
        for (index_t k = 0; k < A.cols(); ++k) {
            const S bkj = B(k, j);
            if (bkj == S(0)) continue;
            const S* ak = A.col(k);
            for (index_t i = 0; i < A.rows(); ++i) cj[i] += bkj * ak[i];
        }
    }
    return C;
}

// ---- triangular solve --------------------------------------------------

template <typename S>
std::vector<S> trsv_sub(const dense_matrix<S>& M, index_t r0, index_t c0, index_t k,
                        std::vector<S> x, bool transpose = false);

// Solve R x = b (or R^T x = b) with R upper triangular, by substitution.
// Throws singular_triangular on an exactly zero pivot.
template <typename S>
std::vector<S> trsv(const dense_matrix<S>& R, const std::vector<S>& b, bool transpose = false) {
    if (R.cols() != R.rows()) throw dimension_error("trsv: matrix not square");
    return trsv_sub(R, 0, 0, R.rows(), b, transpose);
}

// ---- block kernels (solver cascades work on partitions of R/T) ---------

// y = M(r0:r0+rows, c0:c0+cols) x  (or the transpose of that block times x)
template <typename S>
std::vector<S> gemv_sub(const dense_matrix<S>& M, index_t r0, index_t rows, index_t c0,
                        index_t cols, const std::vector<S>& x, bool transpose = false) {
    if (r0 + rows > M.rows() || c0 + cols > M.cols())
        throw dimension_error("gemv_sub: block out of range");
    if (!transpose) {
        if (x.size() != cols) throw dimension_error("gemv_sub: x length mismatch");
        std::vector<S> y(rows, S(0));
        for (index_t j = 0; j < cols; ++j) {
            const S xj = x[j];
            const S* aj = M.col(c0 + j) + r0;
            for (index_t i = 0; i < rows; ++i) y[i] += xj * aj[i];
        }
        return y;
    }
    if (x.size() != rows) throw dimension_error("gemv_sub: x length mismatch");
    std::vector<S> y(cols, S(0));
    for (index_t j = 0; j < cols; ++j) {
        const S* aj = M.col(c0 + j) + r0;
        S s = S(0);
        for (index_t i = 0; i < rows; ++i) s += aj[i] * x[i];
        y[j] = s;
    }
    return y;
}

// Solve with the upper triangular block M(r0:r0+k, c0:c0+k).
template <typename S>
std::vector<S> trsv_sub(const dense_matrix<S>& M, index_t r0, index_t c0, index_t k,
                        std::vector<S> x, bool transpose) {
    if (r0 + k > M.rows() || c0 + k > M.cols()) throw dimension_error("trsv_sub: block out of range");
    if (x.size() != k) throw dimension_error("trsv_sub: rhs length mismatch");
    if (!transpose) {
        for (index_t jj = k; jj-- > 0;) {
            const S dpiv = M(r0 + jj, c0 + jj);
            if (dpiv == S(0)) throw singular_triangular("trsv: zero pivot", jj);
            const S xj = x[jj] / dpiv;
            x[jj] = xj;
            const S* cj = M.col(c0 + jj) + r0;
            for (index_t i = 0; i < jj; ++i) x[i] -= xj * cj[i];
        }
    } else {
        for (index_t j = 0; j < k; ++j) {
            const S dpiv = M(r0 + j, c0 + j);
            if (dpiv == S(0)) throw singular_triangular("trsv: zero pivot", j);
            const S* cj = M.col(c0 + j) + r0;
            S s = x[j];
            for (index_t i = 0; i < j; ++i) s -= cj[i] * x[i];
            x[j] = s / dpiv;
        }
    }
    return x;
}

// ---- matrix demotion ---------------------------------------------------

// One scale per matrix, mirroring demote_vector.
struct scaled_low_matrix {
    dense_matrix<float> data;
    double scale = 1.0;
};

inline scaled_low_matrix demote_matrix(const dense_matrix<double>& A) {
    double s = 0.0;
    for (double x : A.data()) {
        if (!std::isfinite(x)) throw invalid_input("demote_matrix: non-finite input");
        s = std::max(s, std::abs(x));
    }
    if (s == 0.0) s = 1.0;
    scaled_low_matrix out;
    out.scale = s;
    out.data = dense_matrix<float>(A.rows(), A.cols());
    for (index_t k = 0; k < A.data().size(); ++k)
        out.data.data()[k] = static_cast<float>(A.data()[k] / s);
    return out;
}

} // namespace mixedls
