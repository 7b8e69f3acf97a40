#pragma once
//
// Project     : mixedls
// Module      : mixedls/dense.hpp
// Description : small dense utilities for validation and oracles: LU with
//               partial pivoting, Jacobi symmetric eigenvalues, and
//               one-sided Jacobi singular values
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "matrix.hpp"

namespace mixedls {

// LU factors PA = LU, for oracle solves and explicit inverses.
class lu_factors {
public:
    explicit lu_factors(dense_matrix<double> A) : lu_(std::move(A)) {
        const index_t n = lu_.rows();
        if (lu_.cols() != n) throw dimension_error("lu: matrix not square");
        piv_.resize(n);
        for (index_t k = 0; k < n; ++k) {
            index_t imax = k;
            double amax = std::abs(lu_(k, k));
            for (index_t i = k + 1; i < n; ++i) {
                const double a = std::abs(lu_(i, k));
                if (a > amax) {
                    amax = a;
                    imax = i;
                }
            }
            piv_[k] = imax;
            if (amax == 0.0) throw singular_triangular("lu: zero pivot", k);
            if (imax != k)
                for (index_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(imax, j));
            const double inv = 1.0 / lu_(k, k);
            for (index_t i = k + 1; i < n; ++i) lu_(i, k) *= inv;
            for (index_t j = k + 1; j < n; ++j) {
                const double ukj = lu_(k, j);
                if (ukj == 0.0) continue;
                double* cj = lu_.col(j);
                const double* ck = lu_.col(k);
                for (index_t i = k + 1; i < n; ++i) cj[i] -= ck[i] * ukj;
            }
        }
    }

    std::vector<double> solve(std::vector<double> b) const {
        const index_t n = lu_.rows();
        if (b.size() != n) throw dimension_error("lu::solve: rhs length mismatch");
        for (index_t k = 0; k < n; ++k)
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
        for (index_t j = 0; j < n; ++j) {
            const double xj = b[j];
            if (xj == 0.0) continue;
            const double* lj = lu_.col(j);
            for (index_t i = j + 1; i < n; ++i) b[i] -= lj[i] * xj;
        }
        for (index_t jj = n; jj-- > 0;) {
            b[jj] /= lu_(jj, jj);
            const double xj = b[jj];
            const double* uj = lu_.col(jj);
            for (index_t i = 0; i < jj; ++i) b[i] -= uj[i] * xj;
        }
        return b;
    }

    dense_matrix<double> inverse() const {
        const index_t n = lu_.rows();
        dense_matrix<double> X(n, n);
        std::vector<double> e(n, 0.0);
        for (index_t j = 0; j < n; ++j) {
            std::fill(e.begin(), e.end(), 0.0);
            e[j] = 1.0;
            auto x = solve(e);
            for (index_t i = 0; i < n; ++i) X(i, j) = x[i];
        }
        return X;
    }

private:
    dense_matrix<double> lu_;
    std::vector<index_t> piv_;
};

inline std::vector<double> lu_solve(const dense_matrix<double>& A, const std::vector<double>& b) {
    return lu_factors(A).solve(b);
}

// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation method.
inline std::vector<double> jacobi_eigenvalues(dense_matrix<double> A, int max_sweeps = 50) {
    const index_t n = A.rows();
    if (A.cols() != n) throw dimension_error("jacobi_eigenvalues: matrix not square");
    const double tol = 1e-15;
    double nrm = norm_fro(A);
    if (nrm == 0.0) return std::vector<double>(n, 0.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (index_t j = 0; j < n; ++j)
            for (index_t i = 0; i < j; ++i) off += A(i, j) * A(i, j);
        if (std::sqrt(2.0 * off) <= tol * nrm) break;
        for (index_t q = 1; q < n; ++q) {
            for (index_t pp = 0; pp < q; ++pp) {
                const double apq = A(pp, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (A(q, q) - A(pp, pp)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (index_t k = 0; k < n; ++k) {
                    const double akp = A(k, pp), akq = A(k, q);
                    A(k, pp) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (index_t k = 0; k < n; ++k) {
                    const double apk = A(pp, k), aqk = A(q, k);
                    A(pp, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (index_t i = 0; i < n; ++i) ev[i] = A(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

struct svd_result {
    dense_matrix<double> U;          // rows x cols, orthonormal columns
    std::vector<double> sigma;       // descending
    dense_matrix<double> V;          // cols x cols
};

// One-sided (Hestenes) Jacobi SVD of a tall or square matrix; computes
// small singular values to high relative accuracy, which the condition
// number checks rely on.
inline svd_result jacobi_svd(dense_matrix<double> A, int max_sweeps = 60) {
    const index_t m = A.rows(), n = A.cols();
    if (m < n) {
        auto r = jacobi_svd(transpose(A), max_sweeps);
        return {std::move(r.V), std::move(r.sigma), std::move(r.U)};
    }
    dense_matrix<double> V = dense_matrix<double>::identity(n);
    const double tol = 1e-15;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (index_t q = 1; q < n; ++q) {
            for (index_t pp = 0; pp < q; ++pp) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                const double* cp = A.col(pp);
                const double* cq = A.col(q);
                for (index_t i = 0; i < m; ++i) {
                    app += cp[i] * cp[i];
                    aqq += cq[i] * cq[i];
                    apq += cp[i] * cq[i];
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                double* wp = A.col(pp);
                double* wq = A.col(q);
                for (index_t i = 0; i < m; ++i) {
                    const double xp = wp[i], xq = wq[i];
                    wp[i] = c * xp - s * xq;
                    wq[i] = s * xp + c * xq;
                }
                double* vp = V.col(pp);
                double* vq = V.col(q);
                for (index_t i = 0; i < n; ++i) {
                    const double xp = vp[i], xq = vq[i];
                    vp[i] = c * xp - s * xq;
                    vq[i] = s * xp + c * xq;
                }
            }
        }
        if (!rotated) break;
    }
    svd_result out;
    out.sigma.resize(n);
    out.U = dense_matrix<double>(m, n);
    for (index_t j = 0; j < n; ++j) {
        double s = 0.0;
        const double* cj = A.col(j);
        for (index_t i = 0; i < m; ++i) s += cj[i] * cj[i];
        out.sigma[j] = std::sqrt(s);
    }
    // order descending, permuting U and V consistently
    std::vector<index_t> perm(n);
    for (index_t j = 0; j < n; ++j) perm[j] = j;
    std::sort(perm.begin(), perm.end(),
              [&](index_t a, index_t b) { return out.sigma[a] > out.sigma[b]; });
    std::vector<double> sig_sorted(n);
    dense_matrix<double> Vs(n, n);
    for (index_t j = 0; j < n; ++j) {
        const index_t src = perm[j];
        sig_sorted[j] = out.sigma[src];
        const double inv = out.sigma[src] > 0.0 ? 1.0 / out.sigma[src] : 0.0;
        for (index_t i = 0; i < m; ++i) out.U(i, j) = A(i, src) * inv;
        for (index_t i = 0; i < n; ++i) Vs(i, j) = V(i, src);
    }
    out.sigma = std::move(sig_sorted);
    out.V = std::move(Vs);
    return out;
}

inline std::vector<double> singular_values(const dense_matrix<double>& A) {
    return jacobi_svd(A).sigma;
}

inline double cond2(const dense_matrix<double>& A) {
    auto sv = singular_values(A);
    if (sv.empty() || sv.back() == 0.0) return std::numeric_limits<double>::infinity();
    return sv.front() / sv.back();
}

} // namespace mixedls
