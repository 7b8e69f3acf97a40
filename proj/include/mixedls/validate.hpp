#pragma once
//
// Project     : mixedls
// Module      : mixedls/validate.hpp
// Description : self-contained validation suites (factorization backward
//               error, preconditioner conditioning, ideal spectrum) shared
//               by the CLI `validate` subcommand and the acceptance tests
//

#include "generate.hpp"

namespace mixedls {

struct validation_check {
    std::string name;
    double observed = 0.0;
    double bound = 0.0;
    bool passed = false;
};

namespace detail {

template <typename S>
double grq_backward_error_B(const grq_factors<S>& f, const dense_matrix<double>& B) {
    dense_matrix<double> RB(f.p, f.n);
    for (index_t j = 0; j < f.p; ++j)
        for (index_t i = 0; i <= j; ++i) RB(i, f.n - f.p + j) = double(f.R(i, j));
    auto Q = cast_factor<double>(f.Q);
    Q.apply_right(RB);
    double num = 0.0;
    for (index_t k = 0; k < RB.data().size(); ++k) {
        const double d = RB.data()[k] - B.data()[k];
        num += d * d;
    }
    return std::sqrt(num) / norm_fro(B);
}

template <typename S>
double grq_backward_error_A(const grq_factors<S>& f, const dense_matrix<double>& A) {
    auto M = cast_matrix<double>(f.T);
    cast_factor<double>(f.Q).apply_right(M);
    cast_factor<double>(f.Z).apply_left(M);
    double num = 0.0;
    for (index_t k = 0; k < M.data().size(); ++k) {
        const double d = M.data()[k] - A.data()[k];
        num += d * d;
    }
    return std::sqrt(num) / norm_fro(A);
}

template <typename S>
double gqr_backward_error_W(const gqr_factors<S>& f, const dense_matrix<double>& W) {
    dense_matrix<double> M(f.n, f.m);
    for (index_t j = 0; j < f.m; ++j)
        for (index_t i = 0; i <= j; ++i) M(i, j) = double(f.R(i, j));
    cast_factor<double>(f.Q).apply_left(M);
    double num = 0.0;
    for (index_t k = 0; k < M.data().size(); ++k) {
        const double d = M.data()[k] - W.data()[k];
        num += d * d;
    }
    return std::sqrt(num) / norm_fro(W);
}

template <typename S>
double gqr_backward_error_V(const gqr_factors<S>& f, const dense_matrix<double>& V) {
    auto M = cast_matrix<double>(f.T);
    cast_factor<double>(f.Z).apply_right(M);
    cast_factor<double>(f.Q).apply_left(M);
    double num = 0.0;
    for (index_t k = 0; k < M.data().size(); ++k) {
        const double d = M.data()[k] - V.data()[k];
        num += d * d;
    }
    return std::sqrt(num) / norm_fro(V);
}

inline double preconditioned_cond2(const augmented_operator& op, const preconditioner& M) {
    const index_t dim = op.total_dim();
    dense_matrix<double> X(dim, dim);
    std::vector<double> e(dim, 0.0);
    for (index_t j = 0; j < dim; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        auto col = M.apply_left(op.apply(M.apply_right(e)));
        for (index_t i = 0; i < dim; ++i) X(i, j) = col[i];
    }
    auto ev = jacobi_eigenvalues(std::move(X));
    double lo = std::abs(ev.front()), hi = 0.0;
    for (double v : ev) {
        lo = std::min(lo, std::abs(v));
        hi = std::max(hi, std::abs(v));
    }
    return lo == 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
}

} // namespace detail

// Backward errors of the generalized factorizations on seeded random
// instances at both precisions, against the 100*eps bound.
inline std::vector<validation_check> validate_factor(index_t instances = 20,
                                                     std::uint64_t seed0 = 1000) {
    double grq_low = 0.0, grq_work = 0.0, gqr_low = 0.0, gqr_work = 0.0;
    for (index_t s = 0; s < instances; ++s) {
        rng_engine rng(seed0 + s);
        const index_t p = 1 + s % 8;
        const index_t n = std::min<index_t>(32, p + 1 + s % 24);
        const index_t m = std::min<index_t>(64, (n > p ? n - p : 1) + 1 + s % 32);
        auto A = gaussian_matrix(m, n, rng);
        auto B = gaussian_matrix(p, n, rng);
        if (n <= m + p) {
            auto fw = grq(B, A);
            grq_work = std::max({grq_work, detail::grq_backward_error_B(fw, B),
                                 detail::grq_backward_error_A(fw, A)});
            auto fl = grq(cast_matrix<float>(B), cast_matrix<float>(A));
            auto Bf = cast_matrix<double>(cast_matrix<float>(B));
            auto Af = cast_matrix<double>(cast_matrix<float>(A));
            grq_low = std::max({grq_low, detail::grq_backward_error_B(fl, Bf),
                                detail::grq_backward_error_A(fl, Af)});
        }
        const index_t gm = 1 + s % 8;
        const index_t gn = std::min<index_t>(32, gm + 1 + s % 20);
        const index_t gp = std::min<index_t>(64, (gn > gm ? gn - gm : 1) + 1 + s % 40);
        auto W = gaussian_matrix(gn, gm, rng);
        auto V = gaussian_matrix(gn, gp, rng);
        if (gn <= gm + gp) {
            auto fw = gqr(W, V);
            gqr_work = std::max({gqr_work, detail::gqr_backward_error_W(fw, W),
                                 detail::gqr_backward_error_V(fw, V)});
            auto fl = gqr(cast_matrix<float>(W), cast_matrix<float>(V));
            auto Wf = cast_matrix<double>(cast_matrix<float>(W));
            auto Vf = cast_matrix<double>(cast_matrix<float>(V));
            gqr_low = std::max({gqr_low, detail::gqr_backward_error_W(fl, Wf),
                                detail::gqr_backward_error_V(fl, Vf)});
        }
    }
    auto check = [](const char* name, double observed, double bound) {
        return validation_check{name, observed, bound, observed <= bound};
    };
    return {check("grq backward error, binary64 factors", grq_work, 100 * 0x1p-53),
            check("grq backward error, binary32 factors", grq_low, 100 * 0x1p-24),
            check("gqr backward error, binary64 factors", gqr_work, 100 * 0x1p-53),
            check("gqr backward error, binary32 factors", gqr_low, 100 * 0x1p-24)};
}

// kappa_2 of the split-preconditioned operator on all four shape cases.
inline std::vector<validation_check> validate_precond(index_t instances = 10,
                                                      std::uint64_t seed0 = 2000) {
    struct shape {
        problem_kind kind;
        index_t m, n, p;
        const char* name;
    };
    const shape shapes[] = {{problem_kind::lse, 9, 6, 3, "lse split preconditioner, m >= n"},
                            {problem_kind::lse, 4, 6, 3, "lse split preconditioner, n > m"},
                            {problem_kind::gls, 3, 6, 8, "gls split preconditioner, n <= p"},
                            {problem_kind::gls, 4, 6, 3, "gls split preconditioner, n > p"}};
    std::vector<validation_check> out;
    for (const auto& sh : shapes) {
        double worst = 0.0;
        for (index_t s = 0; s < instances; ++s) {
            generator_spec gs;
            gs.kind = sh.kind;
            gs.m = sh.m;
            gs.n = sh.n;
            gs.p = sh.p;
            gs.cond = 1e2;
            gs.seed = seed0 + s;
            if (sh.kind == problem_kind::lse) {
                auto pb = gen_lse_problem(gs);
                auto M = build_bd_precond_lse(grq(pb.B, pb.A), 1.0);
                auto op = augmented_operator::lse(pb.A, pb.B, 1.0);
                worst = std::max(worst, detail::preconditioned_cond2(op, M));
            } else {
                auto pb = gen_gls_problem(gs);
                auto M = build_bd_precond_gls(gqr(pb.W, pb.V), 1.0);
                auto op = augmented_operator::gls(pb.W, pb.V, 1.0);
                worst = std::max(worst, detail::preconditioned_cond2(op, M));
            }
        }
        out.push_back({sh.name, worst, 9.1, worst <= 9.1});
    }
    return out;
}

// Eigenvalue multiset of the ideal preconditioned matrix across the four
// shape cases (and the GLS arrangement).
inline std::vector<validation_check> validate_spectrum(double tol = 1e-8,
                                                       std::uint64_t seed = 3000) {
    struct shape {
        problem_kind kind;
        index_t m, n, p;
        const char* name;
    };
    const shape shapes[] = {{problem_kind::lse, 6, 4, 2, "spectrum lse m > n > p"},
                            {problem_kind::lse, 5, 5, 3, "spectrum lse m = n > p"},
                            {problem_kind::lse, 5, 3, 3, "spectrum lse m > n = p"},
                            {problem_kind::lse, 4, 4, 4, "spectrum lse m = n = p"},
                            {problem_kind::gls, 3, 5, 8, "spectrum gls p > n > m"},
                            {problem_kind::gls, 3, 3, 7, "spectrum gls p > n = m"}};
    std::vector<validation_check> out;
    for (const auto& sh : shapes) {
        validation_check c{sh.name, 0.0, tol, false};
        try {
            auto rep = spectrum_check(sh.kind, sh.m, sh.n, sh.p, seed, tol);
            c.observed = rep.max_deviation;
            c.passed = std::abs(rep.sigma_max - spectrum_targets[5]) <= 1e-4 &&
                       std::abs(rep.sigma_min - spectrum_targets[2]) <= 1e-4;
        } catch (const spectrum_mismatch&) {
            c.observed = std::numeric_limits<double>::infinity();
            c.passed = false;
        }
        out.push_back(c);
    }
    return out;
}

} // namespace mixedls
