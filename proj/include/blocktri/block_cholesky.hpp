#pragma once

#include <span>
#include <string>
#include <vector>

#include "blocktri/core.hpp"
#include "blocktri/dense_kernels.hpp"

namespace blocktri {

namespace detail {

template <typename Matrix>
Index max_length(std::span<Matrix> members) {
    Index longest = 0;
    for (const auto& m : members) longest = std::max(longest, m.num_blocks());
    return longest;
}

// Runs a batched step and rewrites member/block coordinates of a Cholesky
// failure from view-local to batch-global.
template <typename Fn>
void batched_step(const std::vector<Index>& active, Index block, Fn&& step) {
    try {
        step();
    } catch (const NotPositiveDefinite& e) {
        throw e.at_member(active[static_cast<std::size_t>(e.member())]).at_block(block);
    }
}

} // namespace detail

/// Block Cholesky factorization of K independent block-tridiagonal systems,
/// in place. Members may differ in length; shorter members drop out of the
/// sweep once exhausted.
///
/// On return diag(j) holds L(j,j) and sub(j) holds L(j+1,j) = A(j+1,j) L(j,j)^{-T}.
template <typename Scalar>
void factorize_btd_batch(std::span<BlockTridiagonalMatrix<Scalar>> members) {
    if (members.empty()) return;
    const Index n = members.front().block_size();
    for (const auto& m : members)
        if (m.block_size() != n) throw DimensionMismatch("batch members have different block sizes");
    const Index longest = detail::max_length(members);
    const Index K = static_cast<Index>(members.size());

    std::vector<Index> active;
    auto collect = [&](Index min_blocks) {
        active.clear();
        for (Index k = 0; k < K; ++k)
            if (members[static_cast<std::size_t>(k)].num_blocks() >= min_blocks) active.push_back(k);
    };
    auto member = [&](Index k) -> BlockTridiagonalMatrix<Scalar>& {
        return members[static_cast<std::size_t>(k)];
    };

    collect(1);
    KernelBatchView<Scalar> first(n, n);
    for (Index k : active) first.push_back(member(k).diag_arena().block_data(0));
    detail::batched_step(active, 0, [&] { batched_chol_factor(first); });

    for (Index j = 0; j + 1 < longest; ++j) {
        collect(j + 2);
        KernelBatchView<const Scalar> factor(n, n);
        KernelBatchView<Scalar> coupling(n, n);
        KernelBatchView<Scalar> next(n, n);
        for (Index k : active) {
            auto& A = member(k);
            factor.push_back(A.diag_arena().block_data(j));
            coupling.push_back(A.sub_arena().block_data(j));
            next.push_back(A.diag_arena().block_data(j + 1));
        }
        // A(j+1,j)^T <- L(j,j)^{-1} A(j+1,j)^T
        batched_trsm_lower(factor, coupling, TriangularSolve::Forward, /*transpose_panel=*/true);
        // A(j+1,j+1) <- A(j+1,j+1) - L(j+1,j) L(j+1,j)^T
        KernelBatchView<const Scalar> coupling_in(n, n);
        for (Index k : active) coupling_in.push_back(member(k).sub_arena().block_data(j));
        batched_gemm_acc(next, coupling_in, coupling_in, false, true, Scalar(-1), Scalar(1));
        detail::batched_step(active, j + 1, [&] { batched_chol_factor(next); });
    }
}

/// Forward and backward block substitution with factors from
/// factorize_btd_batch, in place on the right-hand sides.
template <typename Scalar>
void solve_btd_batch(std::span<const BlockTridiagonalMatrix<Scalar>> factored,
                     std::span<BlockRhs<Scalar>> rhs) {
    if (factored.size() != rhs.size())
        throw DimensionMismatch("solve_btd_batch: " + std::to_string(factored.size()) +
                                " systems but " + std::to_string(rhs.size()) + " right-hand sides");
    if (factored.empty()) return;
    const Index K = static_cast<Index>(factored.size());
    const Index n = factored.front().block_size();
    const Index d = rhs.front().cols();
    for (Index k = 0; k < K; ++k) {
        const auto& A = factored[static_cast<std::size_t>(k)];
        const auto& B = rhs[static_cast<std::size_t>(k)];
        if (A.block_size() != n || B.block_size() != n || B.cols() != d ||
            B.num_blocks() != A.num_blocks())
            throw DimensionMismatch("solve_btd_batch: member " + std::to_string(k) +
                                    " right-hand side is not conformal");
    }
    const Index longest = detail::max_length(factored);

    // Forward sweep: Y(j) = L(j,j)^{-1} (B(j) - L(j,j-1) Y(j-1)).
    for (Index j = 0; j < longest; ++j) {
        KernelBatchView<const Scalar> diag(n, n);
        KernelBatchView<const Scalar> coupling(n, n);
        KernelBatchView<const Scalar> prev(n, d);
        KernelBatchView<Scalar> panel(n, d);
        for (Index k = 0; k < K; ++k) {
            const auto& A = factored[static_cast<std::size_t>(k)];
            auto& B = rhs[static_cast<std::size_t>(k)];
            if (A.num_blocks() <= j) continue;
            diag.push_back(A.diag_arena().block_data(j));
            panel.push_back(B.arena().block_data(j));
            if (j > 0) {
                coupling.push_back(A.sub_arena().block_data(j - 1));
                prev.push_back(B.arena().block_data(j - 1));
            }
        }
        if (j > 0) batched_gemm_acc(panel, coupling, prev, false, false, Scalar(-1), Scalar(1));
        batched_trsm_lower(diag, panel, TriangularSolve::Forward);
    }

    // Backward sweep, aligned on each member's last block:
    // X(j) = L(j,j)^{-T} (Y(j) - L(j+1,j)^T X(j+1)).
    for (Index t = 0; t < longest; ++t) {
        KernelBatchView<const Scalar> diag(n, n);
        KernelBatchView<const Scalar> coupling(n, n);
        KernelBatchView<const Scalar> next(n, d);
        KernelBatchView<Scalar> panel(n, d);
        for (Index k = 0; k < K; ++k) {
            const auto& A = factored[static_cast<std::size_t>(k)];
            auto& B = rhs[static_cast<std::size_t>(k)];
            const Index j = A.num_blocks() - 1 - t;
            if (j < 0) continue;
            diag.push_back(A.diag_arena().block_data(j));
            panel.push_back(B.arena().block_data(j));
            if (t > 0) {
                coupling.push_back(A.sub_arena().block_data(j));
                next.push_back(B.arena().block_data(j + 1));
            }
        }
        if (t > 0) batched_gemm_acc(panel, coupling, next, true, false, Scalar(-1), Scalar(1));
        batched_trsm_lower(diag, panel, TriangularSolve::Backward);
    }
}

template <typename Scalar>
void solve_btd_batch(std::span<BlockTridiagonalMatrix<Scalar>> factored,
                     std::span<BlockRhs<Scalar>> rhs) {
    solve_btd_batch(std::span<const BlockTridiagonalMatrix<Scalar>>(factored), rhs);
}

/// Single-system block Cholesky (the K = 1 batch).
template <typename Scalar>
void serial_factorize(BlockTridiagonalMatrix<Scalar>& A) {
    factorize_btd_batch(std::span<BlockTridiagonalMatrix<Scalar>>(&A, 1));
}

template <typename Scalar>
void serial_solve(const BlockTridiagonalMatrix<Scalar>& factored, BlockRhs<Scalar>& B) {
    solve_btd_batch(std::span<const BlockTridiagonalMatrix<Scalar>>(&factored, 1),
                    std::span<BlockRhs<Scalar>>(&B, 1));
}

} // namespace blocktri
