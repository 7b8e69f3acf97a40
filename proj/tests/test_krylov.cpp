#include <gtest/gtest.h>

#include "mixedls/krylov.hpp"
#include "mixedls/random.hpp"
#include "oracles.hpp"

using namespace mixedls;

namespace {

lse_problem conditioned_lse(index_t m, index_t n, index_t p, double cond, std::uint64_t seed) {
    rng_engine rng(seed);
    auto q1 = qr(gaussian_matrix(m + p, n, rng));
    auto q2 = qr(gaussian_matrix(n, n, rng));
    dense_matrix<double> S(m + p, n);
    for (index_t i = 0; i < n; ++i)
        S(i, i) = n == 1 ? 1.0 : std::pow(cond, -double(i) / double(n - 1));
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

gls_problem conditioned_gls(index_t n, index_t m, index_t p, double cond, std::uint64_t seed) {
    rng_engine rng(seed);
    auto q1 = qr(gaussian_matrix(n, n, rng));
    auto q2 = qr(gaussian_matrix(m + p, n, rng));
    dense_matrix<double> S(n, m + p);
    for (index_t i = 0; i < n; ++i)
        S(i, i) = n == 1 ? 1.0 : std::pow(cond, -double(i) / double(n - 1));
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

// columns of Ml F Mr (or M F) assembled through the appliers
dense_matrix<double> dense_preconditioned(const augmented_operator& op, const preconditioner& M) {
    const index_t dim = op.total_dim();
    dense_matrix<double> X(dim, dim);
    std::vector<double> e(dim, 0.0);
    for (index_t j = 0; j < dim; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        auto col = M.apply_left(op.apply(M.apply_right(e)));
        for (index_t i = 0; i < dim; ++i) X(i, j) = col[i];
    }
    return X;
}

double sym_cond2(const dense_matrix<double>& X) {
    auto ev = jacobi_eigenvalues(X);
    double lo = std::abs(ev.front()), hi = 0.0;
    for (double v : ev) {
        lo = std::min(lo, std::abs(v));
        hi = std::max(hi, std::abs(v));
    }
    return hi / lo;
}

} // namespace

TEST(AugmentedOperator, MatchesDenseAssemblyAndSymmetry) {
    auto pb = conditioned_lse(6, 4, 2, 10.0, 1);
    const double alpha = 0.7;
    auto op = augmented_operator::lse(pb.A, pb.B, alpha);
    auto F = oracle::assemble_lse_augmented(pb.A, pb.B, alpha);
    const index_t dim = op.total_dim();
    ASSERT_EQ(dim, 12u);

    auto zero = op.apply(std::vector<double>(dim, 0.0));
    for (double v : zero) EXPECT_EQ(v, 0.0);

    std::vector<double> e(dim, 0.0);
    for (index_t k = 0; k < dim; ++k) {
        std::fill(e.begin(), e.end(), 0.0);
        e[k] = 1.0;
        auto col = op.apply(e);
        for (index_t i = 0; i < dim; ++i) EXPECT_NEAR(col[i], F(i, k), 1e-15);
    }

    rng_engine rng(2);
    for (int t = 0; t < 10; ++t) {
        auto u = gaussian_vector(dim, rng);
        auto v = gaussian_vector(dim, rng);
        const double a = dot(op.apply(u), v);
        const double b = dot(u, op.apply(v));
        EXPECT_NEAR(a, b, 1e-13 * (std::abs(a) + 1.0));
    }
}

TEST(AugmentedOperator, GlsMatchesDenseAssembly) {
    auto pb = conditioned_gls(6, 2, 7, 10.0, 3);
    const double alpha = 1.3;
    auto op = augmented_operator::gls(pb.W, pb.V, alpha);
    auto F = oracle::assemble_gls_augmented(pb.W, pb.V, alpha);
    const index_t dim = op.total_dim();
    std::vector<double> e(dim, 0.0);
    for (index_t k = 0; k < dim; ++k) {
        std::fill(e.begin(), e.end(), 0.0);
        e[k] = 1.0;
        auto col = op.apply(e);
        for (index_t i = 0; i < dim; ++i) EXPECT_NEAR(col[i], F(i, k), 1e-15);
    }
}

TEST(LeftPrecondLse, MatchesDensePseudoinverseAssembly) {
    auto pb = conditioned_lse(6, 4, 2, 10.0, 5);
    const index_t m = 6, n = 4, p = 2;
    const double alpha = 0.9;
    auto F = grq(pb.B, pb.A);
    auto M = build_left_precond_lse(F, alpha);

    auto zero = M.apply_left(std::vector<double>(12, 0.0));
    for (double v : zero) EXPECT_EQ(v, 0.0);

    // dense assembly of the left preconditioner via an SVD pseudoinverse
    auto Bp = oracle::pinv(pb.B); // n x p
    auto ABp = gemm(pb.A, Bp);    // m x p
    dense_matrix<double> Md(12, 12);
    const double ia = 1.0 / alpha;
    for (index_t i = 0; i < m; ++i) Md(i, i) = ia;
    for (index_t j = 0; j < p; ++j)
        for (index_t i = 0; i < m; ++i) {
            Md(i, m + j) = -ia * ABp(i, j);
            Md(m + j, i) = -ia * ABp(i, j);
        }
    auto AtABp = gemm(transpose(pb.A), ABp); // n x p
    auto BptAtABp = gemm(transpose(Bp), AtABp);
    for (index_t j = 0; j < p; ++j)
        for (index_t i = 0; i < p; ++i) Md(m + i, m + j) = ia * BptAtABp(i, j);
    for (index_t j = 0; j < n; ++j)
        for (index_t i = 0; i < p; ++i) {
            Md(m + i, m + p + j) = Bp(j, i);
            Md(m + p + j, m + i) = Bp(j, i);
        }

    rng_engine rng(6);
    for (int t = 0; t < 10; ++t) {
        auto w = gaussian_vector(12, rng);
        auto got = M.apply_left(w);
        auto want = gemv(Md, w);
        for (index_t i = 0; i < 12; ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
    }
}

TEST(LeftPrecondGls, MatchesDensePseudoinverseAssembly) {
    auto pb = conditioned_gls(6, 3, 5, 10.0, 7);
    const index_t n = 6, m = 3, p = 5;
    const double alpha = 1.4;
    auto F = gqr(pb.W, pb.V);
    auto M = build_left_precond_gls(F, alpha);

    auto Wp = oracle::pinv(pb.W);             // m x n
    auto VtWpt = gemm(transpose(pb.V), transpose(Wp)); // p x m... -> actually p x? V^T (p x n) W+^T (n x m) = p x m
    dense_matrix<double> Md(p + n + m, p + n + m);
    const double ia = 1.0 / alpha;
    for (index_t i = 0; i < p; ++i) Md(i, i) = ia;
    for (index_t j = 0; j < m; ++j)
        for (index_t i = 0; i < p; ++i) {
            Md(i, p + n + j) = -ia * VtWpt(i, j);
            Md(p + n + j, i) = -ia * VtWpt(i, j);
        }
    for (index_t j = 0; j < m; ++j)
        for (index_t i = 0; i < n; ++i) {
            Md(p + i, p + n + j) = Wp(j, i);
            Md(p + n + j, p + i) = Wp(j, i);
        }
    auto VVt = gemm(pb.V, transpose(pb.V));
    auto WpVVt = gemm(Wp, VVt);
    auto WpVVtWpt = gemm(WpVVt, transpose(Wp));
    for (index_t j = 0; j < m; ++j)
        for (index_t i = 0; i < m; ++i) Md(p + n + i, p + n + j) = ia * WpVVtWpt(i, j);

    rng_engine rng(8);
    for (int t = 0; t < 10; ++t) {
        auto w = gaussian_vector(p + n + m, rng);
        auto got = M.apply_left(w);
        auto want = gemv(Md, w);
        for (index_t i = 0; i < p + n + m; ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
    }
}

TEST(BdPrecondLse, ConditionNumberBounded) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto pb = conditioned_lse(12, 8, 3, 1e2, 100 + seed);
        auto F = grq(pb.B, pb.A);
        auto M = build_bd_precond_lse(F, 0.8);
        auto op = augmented_operator::lse(pb.A, pb.B, 0.8);
        auto X = dense_preconditioned(op, M);
        EXPECT_LE(sym_cond2(X), 9.1);

        auto zl = M.apply_left(std::vector<double>(23, 0.0));
        auto zr = M.apply_right(std::vector<double>(23, 0.0));
        for (double v : zl) EXPECT_EQ(v, 0.0);
        for (double v : zr) EXPECT_EQ(v, 0.0);
    }
}

TEST(BdPrecondLse, WideCaseConditionNumberBounded) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto pb = conditioned_lse(4, 6, 3, 1e2, 200 + seed);
        auto F = grq(pb.B, pb.A);
        auto M = build_bd_precond_lse(F, 1.7);
        auto op = augmented_operator::lse(pb.A, pb.B, 1.7);
        EXPECT_LE(sym_cond2(dense_preconditioned(op, M)), 9.1);
    }
}

TEST(BdPrecondGls, ConditionNumberBoundedBothCases) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        // n <= p
        auto pb1 = conditioned_gls(6, 3, 8, 1e2, 300 + seed);
        auto F1 = gqr(pb1.W, pb1.V);
        auto M1 = build_bd_precond_gls(F1, 0.6);
        auto op1 = augmented_operator::gls(pb1.W, pb1.V, 0.6);
        EXPECT_LE(sym_cond2(dense_preconditioned(op1, M1)), 9.1);
        // n > p
        auto pb2 = conditioned_gls(6, 4, 3, 1e2, 400 + seed);
        auto F2 = gqr(pb2.W, pb2.V);
        auto M2 = build_bd_precond_gls(F2, 1.1);
        auto op2 = augmented_operator::gls(pb2.W, pb2.V, 1.1);
        EXPECT_LE(sym_cond2(dense_preconditioned(op2, M2)), 9.1);
    }
}

TEST(BdPrecondLse, LowPrecisionFactorsStayBounded) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto pb = conditioned_lse(12, 8, 3, 1e4, 500 + seed);
        auto Ff = grq(cast_matrix<float>(pb.B), cast_matrix<float>(pb.A));
        auto M = build_bd_precond_lse(promote_factors(Ff), 1.0);
        auto op = augmented_operator::lse(pb.A, pb.B, 1.0);
        auto F = oracle::assemble_lse_augmented(pb.A, pb.B, 1.0);
        const double kF = sym_cond2(F);
        EXPECT_LE(sym_cond2(dense_preconditioned(op, M)), 9.1 + 1e3 * 0x1p-24 * kF);
    }
}

TEST(Gmres, IdentityOperatorConvergesInOneIteration) {
    rng_engine rng(9);
    auto rhs = gaussian_vector(10, rng);
    auto rep = detail::gmres_core([](const std::vector<double>& v) { return v; }, nullptr, nullptr,
                                  rhs, 1e-12, 10);
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.iterations, 1u);
    EXPECT_LE(oracle::rel_vec_diff(rep.solution, rhs), 1e-12);
}

TEST(Gmres, TwoEigenvaluesConvergeInTwoIterations) {
    rng_engine rng(10);
    auto rhs = gaussian_vector(12, rng);
    auto apply = [](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        for (index_t i = 0; i < v.size(); ++i) out[i] = (i % 2 == 0 ? 2.0 : 5.0) * v[i];
        return out;
    };
    auto rep = detail::gmres_core(apply, nullptr, nullptr, rhs, 1e-12, 12);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iterations, 2u);
}

TEST(Gmres, ZeroRhsAndMonotoneResiduals) {
    auto pb = conditioned_lse(8, 5, 2, 1e3, 11);
    auto F = grq(pb.B, pb.A);
    auto op = augmented_operator::lse(pb.A, pb.B, 1.0);
    auto M = build_bd_precond_lse(F, 1.0);

    auto rep0 = gmres(op, M, std::vector<double>(15, 0.0), 1e-10, 15);
    EXPECT_TRUE(rep0.converged);
    EXPECT_EQ(rep0.iterations, 0u);

    rng_engine rng(12);
    auto rhs = gaussian_vector(15, rng);
    auto rep = gmres(op, M, rhs, 1e-12, 15);
    EXPECT_TRUE(rep.converged);
    for (index_t i = 1; i < rep.residual_norms.size(); ++i)
        EXPECT_LE(rep.residual_norms[i], rep.residual_norms[i - 1] * (1.0 + 1e-14));
    // solution solves the augmented system
    auto Fu = op.apply(rep.solution);
    double num = 0.0;
    for (index_t i = 0; i < 15; ++i) num += (Fu[i] - rhs[i]) * (Fu[i] - rhs[i]);
    EXPECT_LE(std::sqrt(num), 1e-8 * norm2(rhs));
}

TEST(Gmres, LeftPreconditionedConvergesWithinDimension) {
    auto pb = conditioned_lse(6, 4, 2, 1e2, 13);
    auto F = grq(pb.B, pb.A);
    auto op = augmented_operator::lse(pb.A, pb.B, 1.0);
    auto M = build_left_precond_lse(F, 1.0);
    rng_engine rng(14);
    auto rhs = gaussian_vector(12, rng);
    auto rep = gmres(op, M, rhs, 1e-10, 12);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iterations, 12u);

    auto pg = conditioned_gls(6, 3, 5, 1e2, 15);
    auto Fg = gqr(pg.W, pg.V);
    auto opg = augmented_operator::gls(pg.W, pg.V, 1.0);
    auto Mg = build_left_precond_gls(Fg, 1.0);
    auto rhsg = gaussian_vector(14, rng);
    auto repg = gmres(opg, Mg, rhsg, 1e-10, 14);
    EXPECT_TRUE(repg.converged);
    EXPECT_LE(repg.iterations, 14u);
}

TEST(GmresRefineLse, ConvergesAndMatchesOracle) {
    for (auto choice : {precond_choice::bd_split, precond_choice::left}) {
        auto pb = conditioned_lse(24, 10, 3, 1e3, 600);
        refinement_config cfg;
        auto res = gmres_refine_lse(pb, cfg, choice);
        ASSERT_EQ(res.trace.status, refine_status::converged);
        EXPECT_GT(res.trace.inner_iterations, 0u);
        auto kkt = oracle::solve_lse_kkt(pb.A, pb.B, pb.b, pb.d);
        EXPECT_LE(oracle::rel_vec_diff(res.state.x, kkt.x), 1e-10);
    }
}

TEST(GmresRefineLse, AlphaRobustness) {
    auto pb = conditioned_lse(20, 8, 3, 1e3, 700);
    refinement_config cfg;
    auto r1 = gmres_refine_lse(pb, cfg, precond_choice::bd_split, 0.1);
    auto r2 = gmres_refine_lse(pb, cfg, precond_choice::bd_split, 1.0);
    auto r3 = gmres_refine_lse(pb, cfg, precond_choice::bd_split, 10.0);
    ASSERT_EQ(r1.trace.status, refine_status::converged);
    ASSERT_EQ(r2.trace.status, refine_status::converged);
    ASSERT_EQ(r3.trace.status, refine_status::converged);
    EXPECT_LE(oracle::rel_vec_diff(r1.state.x, r2.state.x), 1e-11);
    EXPECT_LE(oracle::rel_vec_diff(r2.state.x, r3.state.x), 1e-11);
    EXPECT_LE(oracle::rel_vec_diff(r1.state.x, r3.state.x), 1e-11);
}

TEST(GmresRefineLse, RescuesIllConditionedInstance) {
    // classical refinement fails here, the BD-preconditioned solver converges
    auto pb = conditioned_lse(40, 16, 4, 1e9, 800);
    refinement_config cfg;
    auto classical = mplse(pb, cfg);
    EXPECT_NE(classical.trace.status, refine_status::converged);
    auto res = gmres_refine_lse(pb, cfg, precond_choice::bd_split);
    ASSERT_EQ(res.trace.status, refine_status::converged);
    auto bx = gemv(pb.B, res.state.x);
    double num = 0.0;
    for (index_t i = 0; i < pb.p(); ++i) num += (bx[i] - pb.d[i]) * (bx[i] - pb.d[i]);
    const double err1 = std::sqrt(num) / (norm_fro(pb.B) * norm2(res.state.x) + norm2(pb.d));
    EXPECT_LE(err1, 1e-13);
}

TEST(GmresRefineGls, ConvergesAndMatchesOracle) {
    auto pb = conditioned_gls(14, 4, 12, 1e3, 900);
    refinement_config cfg;
    auto res = gmres_refine_gls(pb, cfg, precond_choice::bd_split);
    ASSERT_EQ(res.trace.status, refine_status::converged);
    auto kkt = oracle::solve_gls_kkt(pb.W, pb.V, pb.d);
    EXPECT_LE(oracle::rel_vec_diff(res.state.x, kkt.x), 1e-10);
    EXPECT_LE(oracle::rel_vec_diff(res.state.y, kkt.y), 1e-10);
}

TEST(GmresRefineGls, ZeroRhsNeedsNoInnerIterations) {
    rng_engine rng(1000);
    gls_problem pb;
    pb.W = gaussian_matrix(8, 3, rng);
    pb.V = gaussian_matrix(8, 7, rng);
    pb.d.assign(8, 0.0);
    refinement_config cfg;
    auto res = gmres_refine_gls(pb, cfg, precond_choice::bd_split);
    EXPECT_EQ(res.trace.status, refine_status::converged);
    EXPECT_EQ(res.trace.inner_iterations, 0u);
    for (double v : res.state.x) EXPECT_EQ(v, 0.0);
    for (double v : res.state.y) EXPECT_EQ(v, 0.0);
}

TEST(SpectrumCheck, TargetsAreRootsOfTheirPolynomials) {
    auto cubic = [](double x) { return ((x - 1.0) * x - 2.0) * x + 1.0; };
    auto quad = [](double x) { return (x - 1.0) * x - 1.0; };
    EXPECT_NEAR(cubic(spectrum_targets[0]), 0.0, 1e-12);
    EXPECT_NEAR(cubic(spectrum_targets[2]), 0.0, 1e-12);
    EXPECT_NEAR(cubic(spectrum_targets[5]), 0.0, 1e-12);
    EXPECT_NEAR(quad(spectrum_targets[1]), 0.0, 1e-12);
    EXPECT_NEAR(quad(spectrum_targets[4]), 0.0, 1e-12);
    EXPECT_NEAR(spectrum_targets[2], 0.4450, 1e-4);
    EXPECT_NEAR(spectrum_targets[5], 1.8019, 1e-4);
}

TEST(SpectrumCheck, FourShapeCasesLse) {
    // m > n > p, m = n > p, m > n = p, m = n = p
    const index_t shapes[4][3] = {{6, 4, 2}, {5, 5, 3}, {5, 3, 3}, {4, 4, 4}};
    for (const auto& s : shapes) {
        auto rep = spectrum_check(problem_kind::lse, s[0], s[1], s[2], 42);
        EXPECT_LE(rep.max_deviation, 1e-8);
        EXPECT_NEAR(rep.sigma_max, spectrum_targets[5], 1e-4);
        EXPECT_NEAR(rep.sigma_min, spectrum_targets[2], 1e-4);
        EXPECT_EQ(rep.multiplicities, rep.expected);
    }
    // multiplicity of the golden pair vanishes when n = p
    auto r1 = spectrum_check(problem_kind::lse, 5, 3, 3, 43);
    EXPECT_EQ(r1.multiplicities[1], 0u);
    EXPECT_EQ(r1.multiplicities[4], 0u);
    // eigenvalue 1 with multiplicity m - n
    auto r2 = spectrum_check(problem_kind::lse, 6, 4, 2, 44);
    EXPECT_EQ(r2.multiplicities[3], 2u);
}

TEST(SpectrumCheck, GlsArrangement) {
    auto rep = spectrum_check(problem_kind::gls, 3, 5, 8, 45);
    EXPECT_LE(rep.max_deviation, 1e-8);
    // cubic roots x m, golden x (n - m), ones x (p - n)
    EXPECT_EQ(rep.multiplicities[0], 3u);
    EXPECT_EQ(rep.multiplicities[1], 2u);
    EXPECT_EQ(rep.multiplicities[3], 3u);
}

TEST(SpectrumCheck, RejectsWrongArrangement) {
    EXPECT_THROW(spectrum_check(problem_kind::lse, 3, 5, 2), dimension_error);
}
