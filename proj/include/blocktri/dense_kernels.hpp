#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "blocktri/core.hpp"
#include "blocktri/errors.hpp"
#include "blocktri/parallel.hpp"

namespace blocktri {

/// Which triangular system trsm_lower solves with a lower factor L.
enum class TriangularSolve {
    Forward,  ///< B <- L^{-1} B
    Backward, ///< B <- L^{-T} B
};

/// Block size above which chol_factor switches to the tiled algorithm.
inline constexpr Index kUnblockedCholeskyLimit = 64;
inline constexpr Index kCholeskyTile = 32;

namespace detail {

// Left-looking unblocked Cholesky on the lower triangle of M.
template <typename Derived>
void chol_unblocked(Eigen::MatrixBase<Derived>& M, Index pivot_offset) {
    using Scalar = typename Derived::Scalar;
    const Index n = M.rows();
    for (Index j = 0; j < n; ++j) {
        const Scalar pivot = M(j, j) - M.row(j).head(j).squaredNorm();
        if (!(pivot > Scalar(0))) throw NotPositiveDefinite(pivot_offset + j + 1);
        const Scalar ljj = std::sqrt(pivot);
        M(j, j) = ljj;
        const Index below = n - j - 1;
        if (below == 0) continue;
        if (j > 0)
            M.col(j).tail(below).noalias() -=
                M.bottomLeftCorner(below, j) * M.row(j).head(j).transpose();
        M.col(j).tail(below) /= ljj;
    }
}

} // namespace detail

/// In-place Cholesky factorization M = L L^T of a symmetric block. Only the
/// lower triangle is read; on return it holds L and the strict upper
/// triangle is zero. Throws NotPositiveDefinite with the 1-based failing
/// pivot.
template <typename Derived>
void chol_factor(const Eigen::MatrixBase<Derived>& M_) {
    auto& M = const_cast<Eigen::MatrixBase<Derived>&>(M_);
    if (M.rows() != M.cols()) throw DimensionMismatch("chol_factor needs a square block");
    const Index n = M.rows();
    if (n <= kUnblockedCholeskyLimit) {
        detail::chol_unblocked(M, 0);
    } else {
        for (Index k0 = 0; k0 < n; k0 += kCholeskyTile) {
            const Index kb = std::min(kCholeskyTile, n - k0);
            const Index rest = n - k0 - kb;
            auto diag = M.block(k0, k0, kb, kb);
            detail::chol_unblocked(diag, k0);
            if (rest == 0) break;
            auto panel = M.block(k0 + kb, k0, rest, kb);
            diag.template triangularView<Eigen::Lower>()
                .transpose()
                .template solveInPlace<Eigen::OnTheRight>(panel);
            M.block(k0 + kb, k0 + kb, rest, rest)
                .template selfadjointView<Eigen::Lower>()
                .rankUpdate(panel, -1);
        }
    }
    M.template triangularView<Eigen::StrictlyUpper>().setZero();
}

/// Triangular solve with a lower factor against a panel, in place on B.
template <typename DerivedL, typename DerivedB>
void trsm_lower(const Eigen::MatrixBase<DerivedL>& L, const Eigen::MatrixBase<DerivedB>& B_,
                TriangularSolve mode) {
    auto& B = const_cast<Eigen::MatrixBase<DerivedB>&>(B_);
    if (L.rows() != L.cols() || L.rows() != B.rows())
        throw DimensionMismatch("trsm_lower: factor is " + std::to_string(L.rows()) + "x" +
                                std::to_string(L.cols()) + ", panel has " +
                                std::to_string(B.rows()) + " rows");
    for (Index i = 0; i < L.rows(); ++i)
        if (L(i, i) == typename DerivedL::Scalar(0)) throw SingularDiagonal(i);
    if (mode == TriangularSolve::Forward)
        L.template triangularView<Eigen::Lower>().solveInPlace(B);
    else
        L.transpose().template triangularView<Eigen::Upper>().solveInPlace(B);
}

/// C <- alpha op(A) op(B) + beta C.
template <typename DerivedC, typename DerivedA, typename DerivedB, typename Scalar>
void gemm_acc(const Eigen::MatrixBase<DerivedC>& C_, const Eigen::MatrixBase<DerivedA>& A,
              const Eigen::MatrixBase<DerivedB>& B, bool trans_a, bool trans_b, Scalar alpha,
              Scalar beta) {
    auto& C = const_cast<Eigen::MatrixBase<DerivedC>&>(C_);
    const Index m = trans_a ? A.cols() : A.rows();
    const Index q = trans_a ? A.rows() : A.cols();
    const Index qb = trans_b ? B.cols() : B.rows();
    const Index p = trans_b ? B.rows() : B.cols();
    if (q != qb || C.rows() != m || C.cols() != p)
        throw DimensionMismatch("gemm_acc: op(A) is " + std::to_string(m) + "x" +
                                std::to_string(q) + ", op(B) is " + std::to_string(qb) + "x" +
                                std::to_string(p) + ", C is " + std::to_string(C.rows()) + "x" +
                                std::to_string(C.cols()));
    using CS = typename DerivedC::Scalar;
    if (beta == Scalar(0))
        C.setZero();
    else if (beta != Scalar(1))
        C *= CS(beta);
    if (alpha == Scalar(0) || q == 0) return;
    const CS a(alpha);
    if (!trans_a && !trans_b)
        C.noalias() += a * A * B;
    else if (trans_a && !trans_b)
        C.noalias() += a * A.transpose() * B;
    else if (!trans_a && trans_b)
        C.noalias() += a * A * B.transpose();
    else
        C.noalias() += a * A.transpose() * B.transpose();
}

/// K equally shaped blocks living in caller-owned storage. Members must be
/// pairwise disjoint; `Scalar` may be const-qualified for read-only inputs.
template <typename Scalar>
class KernelBatchView {
public:
    using value_type = std::remove_const_t<Scalar>;
    using map_type = std::conditional_t<std::is_const_v<Scalar>, ConstBlockMap<value_type>,
                                        BlockMap<value_type>>;

    KernelBatchView(Index rows, Index cols) : rows_(rows), cols_(cols) { }

    void push_back(Scalar* base) { bases_.push_back(base); }
    void reserve(Index count) { bases_.reserve(static_cast<std::size_t>(count)); }

    Index size() const { return static_cast<Index>(bases_.size()); }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Scalar* base(Index k) const { return bases_[static_cast<std::size_t>(k)]; }

    map_type operator[](Index k) const { return map_type(base(k), rows_, cols_); }

    /// True when no two members overlap in memory.
    bool disjoint() const {
        std::vector<Scalar*> sorted(bases_);
        std::sort(sorted.begin(), sorted.end(), std::less<Scalar*>());
        const Index span = rows_ * cols_;
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i] < sorted[i - 1] + span) return false;
        return true;
    }

private:
    Index rows_;
    Index cols_;
    std::vector<Scalar*> bases_;
};

namespace detail {
template <typename A, typename B>
void require_same_count(const A& a, const B& b, const char* op) {
    if (a.size() != b.size())
        throw DimensionMismatch(std::string(op) + ": batch views have " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()) + " members");
}
} // namespace detail

/// Applies `op(k)` to every member; see for_each_member for error semantics.
template <typename Fn>
void batched(Index count, Fn&& op) {
    for_each_member(count, std::forward<Fn>(op));
}

template <typename Scalar>
void batched_chol_factor(const KernelBatchView<Scalar>& blocks) {
    batched(blocks.size(), [&](Index k) { chol_factor(blocks[k]); });
}

/// With `transpose_panel` the solve is applied to B^T, i.e. B <- B L^{-T}
/// for Forward mode.
template <typename ScalarL, typename Scalar>
void batched_trsm_lower(const KernelBatchView<ScalarL>& factors, const KernelBatchView<Scalar>& panels,
                        TriangularSolve mode, bool transpose_panel = false) {
    detail::require_same_count(factors, panels, "batched_trsm_lower");
    batched(panels.size(), [&](Index k) {
        if (transpose_panel)
            trsm_lower(factors[k], panels[k].transpose(), mode);
        else
            trsm_lower(factors[k], panels[k], mode);
    });
}

template <typename ScalarC, typename ScalarA, typename ScalarB, typename Scalar>
void batched_gemm_acc(const KernelBatchView<ScalarC>& C, const KernelBatchView<ScalarA>& A,
                      const KernelBatchView<ScalarB>& B, bool trans_a, bool trans_b, Scalar alpha,
                      Scalar beta) {
    detail::require_same_count(C, A, "batched_gemm_acc");
    detail::require_same_count(C, B, "batched_gemm_acc");
    batched(C.size(), [&](Index k) { gemm_acc(C[k], A[k], B[k], trans_a, trans_b, alpha, beta); });
}

} // namespace blocktri
