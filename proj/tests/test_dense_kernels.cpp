#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "blocktri/dense_kernels.hpp"
#include "test_support.hpp"

using namespace blocktri;
using Mat = DenseMatrix<double>;
using RowMat = Block<double>;

TEST(CholFactor, Scalar) {
    Mat M = Mat::Constant(1, 1, 4.0);
    chol_factor(M);
    EXPECT_EQ(M(0, 0), 2.0);
}

TEST(CholFactor, TwoByTwo) {
    Mat M(2, 2);
    M << 4, 2, 2, 5;
    chol_factor(M);
    Mat L(2, 2);
    L << 2, 0, 1, 2;
    EXPECT_EQ(M, L);
}

TEST(CholFactor, NegativeSecondPivot) {
    Mat M(2, 2);
    M << 1, 2, 2, 1;
    try {
        chol_factor(M);
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2);
    }
}

TEST(CholFactor, BlockedPathReportsGlobalPivot) {
    Mat M = Mat::Identity(100, 100);
    M(70, 70) = -1;
    try {
        chol_factor(M);
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 71);
    }
}

TEST(CholFactor, ReconstructsRandomSpd) {
    std::mt19937_64 rng(42);
    for (Index n : {1, 2, 3, 7, 16, 31, 32, 33, 64, 65, 100, 130}) {
        const Mat M = support::random_spd(n, rng);
        RowMat L = M; // row-major storage like the arenas
        chol_factor(L);
        EXPECT_TRUE(L.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero(0.0)) << "n=" << n;
        const double err = (Mat(L * L.transpose()) - M).cwiseAbs().maxCoeff();
        EXPECT_LE(err, 1e-13 * M.cwiseAbs().maxCoeff()) << "n=" << n;
    }
}

TEST(CholFactor, BlockedMatchesUnblocked) {
    std::mt19937_64 rng(7);
    const Mat M = support::random_spd(96, rng);
    Mat blocked = M;
    chol_factor(blocked);
    Mat unblocked = M;
    detail::chol_unblocked(unblocked, 0);
    unblocked.triangularView<Eigen::StrictlyUpper>().setZero();
    EXPECT_LE((blocked - unblocked).cwiseAbs().maxCoeff(), 1e-13 * blocked.cwiseAbs().maxCoeff());
}

TEST(TrsmLower, IdentityLeavesPanel) {
    std::mt19937_64 rng(1);
    const Mat B = support::random_matrix(3, 4, rng);
    const Mat I = Mat::Identity(3, 3);
    for (auto mode : {TriangularSolve::Forward, TriangularSolve::Backward}) {
        Mat X = B;
        trsm_lower(I, X, mode);
        EXPECT_EQ(X, B);
    }
}

TEST(TrsmLower, ForwardSubstitution) {
    Mat L(2, 2);
    L << 2, 0, 1, 2;
    Mat B(2, 1);
    B << 2, 3;
    trsm_lower(L, B, TriangularSolve::Forward);
    EXPECT_DOUBLE_EQ(B(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(B(1, 0), 1.0);
}

TEST(TrsmLower, BackwardSubstitutionResidual) {
    Mat L(2, 2);
    L << 2, 0, 1, 2;
    Mat b(2, 1);
    b << 1, 2;
    Mat x = b;
    trsm_lower(L, x, TriangularSolve::Backward);
    EXPECT_LT((L.transpose() * x - b).norm(), 1e-14);
}

TEST(TrsmLower, ZeroDiagonal) {
    Mat L(2, 2);
    L << 1, 0, 3, 0;
    Mat B = Mat::Ones(2, 1);
    EXPECT_THROW(trsm_lower(L, B, TriangularSolve::Forward), SingularDiagonal);
}

TEST(TrsmLower, MultiplyBackRecoversPanel) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        Mat L = support::random_spd(8, rng);
        chol_factor(L);
        const Mat B = support::random_matrix(8, 5, rng);
        Mat X = B;
        trsm_lower(L, X, TriangularSolve::Forward);
        EXPECT_LE((L * X - B).cwiseAbs().maxCoeff(), 1e-13 * B.cwiseAbs().maxCoeff());
        X = B;
        trsm_lower(L, X, TriangularSolve::Backward);
        EXPECT_LE((L.transpose() * X - B).cwiseAbs().maxCoeff(), 1e-13 * B.cwiseAbs().maxCoeff());
    }
}

TEST(GemmAcc, AlphaZeroBetaOneIsNoop) {
    std::mt19937_64 rng(2);
    const Mat A = support::random_matrix(3, 3, rng), B = support::random_matrix(3, 3, rng);
    const Mat C0 = support::random_matrix(3, 3, rng);
    Mat C = C0;
    gemm_acc(C, A, B, false, false, 0.0, 1.0);
    EXPECT_EQ(C, C0);
}

TEST(GemmAcc, IdentityProduct) {
    const Mat I = Mat::Identity(3, 3);
    Mat C = Mat::Constant(3, 3, 7.0);
    gemm_acc(C, I, I, false, false, 1.0, 0.0);
    EXPECT_EQ(C, I);
}

TEST(GemmAcc, MatchesNaiveTripleLoop) {
    std::mt19937_64 rng(3);
    for (bool ta : {false, true})
        for (bool tb : {false, true}) {
            const Mat A = support::random_matrix(3, 3, rng), B = support::random_matrix(3, 3, rng);
            const Mat C0 = support::random_matrix(3, 3, rng);
            const double alpha = -0.75, beta = 0.5;
            Mat expected = C0;
            for (Index i = 0; i < 3; ++i)
                for (Index j = 0; j < 3; ++j) {
                    double s = 0;
                    for (Index k = 0; k < 3; ++k) s += (ta ? A(k, i) : A(i, k)) * (tb ? B(j, k) : B(k, j));
                    expected(i, j) = alpha * s + beta * C0(i, j);
                }
            Mat C = C0;
            gemm_acc(C, A, B, ta, tb, alpha, beta);
            EXPECT_LT((C - expected).cwiseAbs().maxCoeff(), 1e-14) << ta << tb;
        }
}

TEST(GemmAcc, RejectsNonConformal) {
    Mat C(2, 2), A(2, 3), B(2, 2);
    EXPECT_THROW(gemm_acc(C, A, B, false, false, 1.0, 0.0), DimensionMismatch);
}

namespace {
struct Batch {
    BlockArena<double> arena;
    KernelBatchView<double> view;
    Batch(Index K, Index rows, Index cols) : arena(K, rows, cols), view(rows, cols) {
        for (Index k = 0; k < K; ++k) view.push_back(arena.block_data(k));
    }
    KernelBatchView<const double> cview() const {
        KernelBatchView<const double> v(arena.rows(), arena.cols());
        for (Index k = 0; k < arena.count(); ++k) v.push_back(arena.block_data(k));
        return v;
    }
};
} // namespace

TEST(Batched, SingleMemberIsBitwiseSingleOp) {
    std::mt19937_64 rng(4);
    const Mat M = support::random_spd(6, rng);
    Batch b(1, 6, 6);
    b.arena[0] = M;
    batched_chol_factor(b.view);
    RowMat single = M;
    chol_factor(single);
    EXPECT_EQ(RowMat(b.arena[0]), single);
}

TEST(Batched, IdenticalMembersGiveIdenticalFactors) {
    std::mt19937_64 rng(5);
    const Mat M = support::random_spd(5, rng);
    Batch b(8, 5, 5);
    for (Index k = 0; k < 8; ++k) b.arena[k] = M;
    batched_chol_factor(b.view);
    for (Index k = 1; k < 8; ++k) EXPECT_EQ(RowMat(b.arena[k]), RowMat(b.arena[0]));
}

TEST(Batched, GemmMatchesSequentialLoop) {
    std::mt19937_64 rng(6);
    const Index K = 16;
    Batch C(K, 4, 3), A(K, 4, 5), B(K, 3, 5);
    for (Index k = 0; k < K; ++k) {
        C.arena[k] = support::random_matrix(4, 3, rng);
        A.arena[k] = support::random_matrix(4, 5, rng);
        B.arena[k] = support::random_matrix(3, 5, rng);
    }
    BlockArena<double> expected = C.arena;
    for (Index k = 0; k < K; ++k) gemm_acc(expected[k], A.arena[k], B.arena[k], false, true, 2.0, -1.0);
    batched_gemm_acc(C.view, A.cview(), B.cview(), false, true, 2.0, -1.0);
    EXPECT_EQ(C.arena, expected);
}

TEST(Batched, TrsmMatchesSequentialLoop) {
    std::mt19937_64 rng(8);
    const Index K = 12;
    Batch L(K, 4, 4), B(K, 4, 2);
    for (Index k = 0; k < K; ++k) {
        L.arena[k] = support::random_spd(4, rng);
        chol_factor(L.arena[k]);
        B.arena[k] = support::random_matrix(4, 2, rng);
    }
    BlockArena<double> expected = B.arena;
    for (Index k = 0; k < K; ++k) trsm_lower(L.arena[k], expected[k], TriangularSolve::Backward);
    batched_trsm_lower(L.cview(), B.view, TriangularSolve::Backward);
    EXPECT_EQ(B.arena, expected);
}

TEST(Batched, ReportsLowestFailingMember) {
    std::mt19937_64 rng(10);
    Batch b(6, 3, 3);
    for (Index k = 0; k < 6; ++k) b.arena[k] = support::random_spd(3, rng);
    b.arena[2] = -b.arena[2];
    b.arena[4] = -b.arena[4];
    try {
        batched_chol_factor(b.view);
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.member(), 2);
        EXPECT_EQ(e.pivot(), 1);
    }
}

TEST(Batched, OtherErrorsCarryMemberIndex) {
    Batch L(3, 2, 2), B(3, 2, 1);
    for (Index k = 0; k < 3; ++k) L.arena[k].setIdentity();
    L.arena[1](1, 1) = 0;
    try {
        batched_trsm_lower(L.cview(), B.view, TriangularSolve::Forward);
        FAIL() << "expected BatchMemberError";
    } catch (const BatchMemberError& e) {
        EXPECT_EQ(e.member(), 1);
    }
}

TEST(Batched, ThreadCountDoesNotChangeResults) {
    std::mt19937_64 rng(12);
    Batch a(32, 6, 6);
    for (Index k = 0; k < 32; ++k) a.arena[k] = support::random_spd(6, rng);
    Batch b(32, 6, 6);
    b.arena = a.arena;
    b.view = KernelBatchView<double>(6, 6);
    for (Index k = 0; k < 32; ++k) b.view.push_back(b.arena.block_data(k));
    set_batch_threads(1);
    batched_chol_factor(a.view);
    set_batch_threads(4);
    batched_chol_factor(b.view);
    set_batch_threads(0);
    EXPECT_EQ(a.arena, b.arena);
}

TEST(KernelBatchView, DisjointnessCheck) {
    BlockArena<double> arena(4, 2, 2);
    KernelBatchView<double> ok(2, 2);
    for (Index k = 0; k < 4; ++k) ok.push_back(arena.block_data(k));
    EXPECT_TRUE(ok.disjoint());
    KernelBatchView<double> overlapping(2, 2);
    overlapping.push_back(arena.block_data(0));
    overlapping.push_back(arena.block_data(0) + 1);
    EXPECT_FALSE(overlapping.disjoint());
}
