#include <gtest/gtest.h>

#include "mixedls/factor.hpp"
#include "mixedls/random.hpp"
#include "oracles.hpp"

using namespace mixedls;

namespace {

// ||Q^T Q - I||_F measured through applications to identity columns
template <typename S>
double orthogonality_defect(const householder_factor<S>& Q) {
    auto Qd = dense_orthogonal(cast_factor<double>(Q));
    auto G = gemm(transpose(Qd), Qd);
    double s = 0.0;
    for (index_t j = 0; j < G.cols(); ++j)
        for (index_t i = 0; i < G.rows(); ++i) {
            const double d = G(i, j) - (i == j ? 1.0 : 0.0);
            s += d * d;
        }
    return std::sqrt(s);
}

} // namespace

TEST(Qr, Identity) {
    auto f = qr(dense_matrix<double>::identity(3));
    for (index_t i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(f.R(i, i)), 1.0, 1e-15);
    EXPECT_LE(orthogonality_defect(f.Q), 1e-14);
}

TEST(Qr, ColumnNormPreserved) {
    dense_matrix<double> A(2, 1);
    A(0, 0) = 3.0;
    A(1, 0) = 4.0;
    auto f = qr(A);
    EXPECT_NEAR(std::abs(f.R(0, 0)), 5.0, 1e-14);
}

TEST(Qr, RandomReconstruction) {
    rng_engine rng(42);
    auto A = gaussian_matrix(20, 8, rng);
    auto f = qr(A);
    dense_matrix<double> QR = f.R;
    f.Q.apply_left(QR);
    EXPECT_LE(oracle::rel_fro_diff(QR, A), 1e-14);
    EXPECT_LE(orthogonality_defect(f.Q), 50.0 * 20 * 0x1p-53);
}

TEST(Qr, EmptyThrows) {
    EXPECT_THROW(qr(dense_matrix<double>()), dimension_error);
}

TEST(Rq, AlreadyInTargetForm) {
    dense_matrix<double> B(1, 2);
    B(0, 0) = 0.0;
    B(0, 1) = 1.0;
    auto f = rq(B);
    EXPECT_NEAR(std::abs(f.R(0, 0)), 1.0, 1e-15);
    EXPECT_LE(orthogonality_defect(f.Q), 1e-14);
}

TEST(Rq, IdentitySquare) {
    auto f = rq(dense_matrix<double>::identity(4));
    for (index_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(f.R(i, i)), 1.0, 1e-15);
}

TEST(Rq, RandomReconstruction) {
    rng_engine rng(1);
    auto B = gaussian_matrix(4, 10, rng);
    auto f = rq(B);
    // rebuild [0, R] Q
    dense_matrix<double> RB(4, 10);
    for (index_t j = 0; j < 4; ++j)
        for (index_t i = 0; i <= j; ++i) RB(i, 6 + j) = f.R(i, j);
    f.Q.apply_right(RB);
    EXPECT_LE(oracle::rel_fro_diff(RB, B), 1e-14);
}

TEST(Rq, WiderThanTallRequired) {
    rng_engine rng(2);
    EXPECT_THROW(rq(gaussian_matrix(5, 3, rng)), dimension_error);
}

TEST(Grq, TrivialOrthogonalInput) {
    const index_t n = 5, p = 2;
    auto A = dense_matrix<double>::identity(n);
    dense_matrix<double> B(p, n);
    for (index_t i = 0; i < p; ++i) B(i, n - p + i) = 1.0;
    auto f = grq(B, A);
    for (index_t i = 0; i < p; ++i) EXPECT_NEAR(std::abs(f.R(i, i)), 1.0, 1e-14);
    for (index_t i = 0; i < n; ++i) EXPECT_NEAR(std::abs(f.T(i, i)), 1.0, 1e-14);
    EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_grq_B(f), B), 1e-14);
    EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_grq_A(f), A), 1e-14);
}

TEST(Grq, BackwardErrorLowAndWorking) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        rng_engine rng(100 + seed);
        auto A = gaussian_matrix(12, 8, rng);
        auto B = gaussian_matrix(3, 8, rng);

        auto fw = grq(B, A);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_grq_B(fw), B), 100 * 0x1p-53);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_grq_A(fw), A), 100 * 0x1p-53);

        auto Af = cast_matrix<float>(A);
        auto Bf = cast_matrix<float>(B);
        auto fl = grq(Bf, Af);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_grq_B(fl), cast_matrix<double>(Bf)),
                  100 * 0x1p-24);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_grq_A(fl), cast_matrix<double>(Af)),
                  100 * 0x1p-24);
    }
}

TEST(Grq, DimensionChecks) {
    rng_engine rng(9);
    // p > n
    EXPECT_THROW(grq(gaussian_matrix(4, 3, rng), gaussian_matrix(5, 3, rng)), dimension_error);
    // n > m + p
    EXPECT_THROW(grq(gaussian_matrix(1, 8, rng), gaussian_matrix(2, 8, rng)), dimension_error);
}

TEST(Gqr, TrivialOrthogonalInput) {
    const index_t n = 4, m = 2;
    dense_matrix<double> W(n, m);
    for (index_t i = 0; i < m; ++i) W(i, i) = 1.0;
    auto V = dense_matrix<double>::identity(n);
    auto f = gqr(W, V);
    for (index_t i = 0; i < m; ++i) EXPECT_NEAR(std::abs(f.R(i, i)), 1.0, 1e-14);
    EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_gqr_W(f), W), 1e-14);
    EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_gqr_V(f), V), 1e-14);
}

TEST(Gqr, BackwardErrorLowAndWorking) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        rng_engine rng(200 + seed);
        auto W = gaussian_matrix(10, 4, rng);
        auto V = gaussian_matrix(10, 8, rng);

        auto fw = gqr(W, V);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_gqr_W(fw), W), 100 * 0x1p-53);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_gqr_V(fw), V), 100 * 0x1p-53);

        auto Wf = cast_matrix<float>(W);
        auto Vf = cast_matrix<float>(V);
        auto fl = gqr(Wf, Vf);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_gqr_W(fl), cast_matrix<double>(Wf)),
                  100 * 0x1p-24);
        EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_gqr_V(fl), cast_matrix<double>(Vf)),
                  100 * 0x1p-24);
    }
}

TEST(Gqr, TallRqBranch) {
    // n > p exercises the tall RQ inside gqr
    rng_engine rng(33);
    auto W = gaussian_matrix(6, 4, rng);
    auto V = gaussian_matrix(6, 3, rng);
    auto f = gqr(W, V);
    EXPECT_LE(oracle::rel_fro_diff(oracle::reconstruct_gqr_V(f), V), 100 * 0x1p-53);
    // bottom p x p of T upper triangular
    for (index_t j = 0; j < 3; ++j)
        for (index_t i = j + 1; i < 3; ++i) EXPECT_EQ(f.T(3 + i, j), 0.0);
}

TEST(ApplyOrthogonal, IdentityFactor) {
    auto Q = householder_factor<double>::identity(4);
    std::vector<double> v = {1.0, -2.0, 3.0, 0.5};
    EXPECT_EQ(Q.apply(v), v);
}

TEST(ApplyOrthogonal, NormPreservationAndRoundtrip) {
    rng_engine rng(77);
    auto f = qr(gaussian_matrix(15, 15, rng));
    for (int trial = 0; trial < 20; ++trial) {
        auto v = gaussian_vector(15, rng);
        auto qv = f.Q.apply(v);
        EXPECT_NEAR(norm2(qv), norm2(v), 1e-14 * norm2(v));
        auto back = f.Q.apply(f.Q.apply(v, true));
        for (index_t i = 0; i < 15; ++i) EXPECT_NEAR(back[i], v[i], 1e-13 * (1.0 + std::abs(v[i])));
    }
    std::vector<double> wrong(14);
    EXPECT_THROW(f.Q.apply(wrong), dimension_error);
}

TEST(Trsv, HandSolvedSystem) {
    dense_matrix<double> T(2, 2);
    T(0, 0) = 2.0;
    T(0, 1) = 1.0;
    T(1, 1) = 4.0;
    auto x = trsv(T, {4.0, 8.0});
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(Trsv, IdentityAndErrors) {
    auto I = dense_matrix<double>::identity(3);
    std::vector<double> b = {1.0, 2.0, 3.0};
    EXPECT_EQ(trsv(I, b), b);

    dense_matrix<double> Z(2, 2);
    Z(0, 0) = 1.0; // Z(1,1) stays zero
    try {
        trsv(Z, {1.0, 1.0});
        FAIL() << "expected singular_triangular";
    } catch (const singular_triangular& e) {
        EXPECT_EQ(e.index, 1u);
    }
}

TEST(Trsv, ResidualOnUnitDiagonal) {
    rng_engine rng(5);
    const index_t n = 16;
    dense_matrix<double> T(n, n);
    for (index_t j = 0; j < n; ++j) {
        T(j, j) = 1.0;
        for (index_t i = 0; i < j; ++i) T(i, j) = 0.3 * gaussian_vector(1, rng)[0];
    }
    for (bool tr : {false, true}) {
        auto b = gaussian_vector(n, rng);
        auto x = trsv(T, b, tr);
        auto Tx = gemv(tr ? transpose(T) : T, x);
        double num = 0.0;
        for (index_t i = 0; i < n; ++i) num += (Tx[i] - b[i]) * (Tx[i] - b[i]);
        EXPECT_LE(std::sqrt(num), 1e-14 * norm2(b));
    }
}

TEST(Trsv, ModeratelyConditionedResidual) {
    // geometric diagonal spanning six orders of magnitude
    rng_engine rng(6);
    const index_t n = 24;
    dense_matrix<double> T(n, n);
    std::vector<double> diag(n);
    for (index_t i = 0; i < n; ++i) diag[i] = std::pow(1e6, -double(i) / double(n - 1));
    for (index_t j = 0; j < n; ++j) {
        T(j, j) = diag[j];
        // off-diagonals scaled by the row's diagonal keep kappa ~ 1e6
        for (index_t i = 0; i < j; ++i)
            T(i, j) = 0.05 * diag[i] * gaussian_vector(1, rng)[0] / std::sqrt(double(n));
    }
    auto b = gaussian_vector(n, rng);
    auto x = trsv(T, b);
    auto Tx = gemv(T, x);
    double num = 0.0;
    for (index_t i = 0; i < n; ++i) num += (Tx[i] - b[i]) * (Tx[i] - b[i]);
    EXPECT_LE(std::sqrt(num), 1e-10 * norm2(b));
}

TEST(Gemv, TrivialAndColumns) {
    rng_engine rng(8);
    auto A = gaussian_matrix(6, 4, rng);
    auto y = gemv(A, std::vector<double>(4, 0.0));
    for (double v : y) EXPECT_EQ(v, 0.0);
    for (index_t k = 0; k < 4; ++k) {
        std::vector<double> ek(4, 0.0);
        ek[k] = 1.0;
        auto col = gemv(A, ek);
        for (index_t i = 0; i < 6; ++i) EXPECT_EQ(col[i], A(i, k));
    }
    EXPECT_THROW(gemv(A, std::vector<double>(5, 0.0)), dimension_error);
}

TEST(Gemv, ExtendedAccumulationMatchesOracle) {
    // cancellation-heavy rows built from integer-valued doubles
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<long> iu(-(1L << 24), 1L << 24);
    dense_matrix<double> A(3, 40);
    std::vector<double> x(40);
    for (index_t j = 0; j < 20; ++j) {
        const double a = double(iu(rng));
        for (index_t i = 0; i < 3; ++i) {
            const double r = double(iu(rng));
            A(i, 2 * j) = r;
            A(i, 2 * j + 1) = -r;
        }
        x[2 * j] = a;
        x[2 * j + 1] = a; // columns cancel pairwise
        A(0, 2 * j + 1) += double(iu(rng) >> 12);
    }
    auto y = gemv(A, x, false, precision_level::extended());
    for (index_t i = 0; i < 3; ++i) {
        std::vector<double> row(40);
        for (index_t j = 0; j < 40; ++j) row[j] = A(i, j);
        const auto exact = oracle::exact_dot(row, x);
        EXPECT_LE(oracle::rel_error_vs_exact(y[i], exact), 1e-25);
    }
}

TEST(Orthogonality, InvariantAcrossPrecisions) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        rng_engine rng(300 + seed);
        auto A = gaussian_matrix(24, 10, rng);
        auto B = gaussian_matrix(4, 10, rng);
        auto fw = grq(B, A);
        EXPECT_LE(orthogonality_defect(fw.Q), 50.0 * 10 * 0x1p-53);
        EXPECT_LE(orthogonality_defect(fw.Z), 50.0 * 24 * 0x1p-53);
        auto fl = grq(cast_matrix<float>(B), cast_matrix<float>(A));
        EXPECT_LE(orthogonality_defect(fl.Q), 50.0 * 10 * 0x1p-24);
        EXPECT_LE(orthogonality_defect(fl.Z), 50.0 * 24 * 0x1p-24);
    }
}
