#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blocktri/block_cholesky.hpp"
#include "blocktri/core.hpp"
#include "blocktri/dense_kernels.hpp"

namespace blocktri {

struct RecursionConfig {
    /// Crossover N*: matrices with at most this many block rows are
    /// factored serially.
    Index n_star = 64;
    /// Target interior segment length.
    Index reduction_factor = 8;
    Index max_levels = 32;
    /// Ignore n_star and recurse while a level still yields >= 2 segments.
    bool auto_crossover = false;

    void validate() const {
        if (n_star < 1) throw InvalidDimensions("n_star must be >= 1");
        if (reduction_factor < 1) throw InvalidDimensions("reduction factor must be >= 1");
        if (max_levels < 0) throw InvalidDimensions("max_levels must be >= 0");
    }
};

/// Separators at 0, rho+1, 2(rho+1), ... plus the last block. When the last
/// block would sit right after a separator, that separator is dropped so the
/// tail segment grows instead (length <= 2 rho).
inline PartitionPlan plan_partition(Index num_blocks, const RecursionConfig& cfg) {
    cfg.validate();
    if (num_blocks < 3)
        throw InvalidDimensions("cannot partition " + std::to_string(num_blocks) +
                                " blocks: need at least 3");
    const Index stride = cfg.reduction_factor + 1;
    PartitionPlan plan;
    plan.num_blocks = num_blocks;
    for (Index s = 0; s < num_blocks; s += stride) plan.separators.push_back(s);
    const Index last = num_blocks - 1;
    if (plan.separators.back() != last) {
        if (plan.separators.back() == last - 1) plan.separators.pop_back();
        plan.separators.push_back(last);
    }
    for (std::size_t k = 0; k + 1 < plan.separators.size(); ++k)
        plan.segments.push_back({plan.separators[k] + 1, plan.separators[k + 1]});
    return plan;
}

/// The interiors of one level and their couplings to the separators.
///
/// For segment k (between separators s_k and s_{k+1}):
///   coupling_left[k]  = A(begin, s_k)      (enters the first interior row)
///   coupling_right[k] = A(s_{k+1}, end-1)  (its transpose enters the last row)
/// and factors[k] holds F = A_uu^{-1} A_lu as J_k panels of n x 2n, the
/// first n columns belonging to s_k and the last n to s_{k+1}.
template <typename Scalar = double>
struct SegmentBatch {
    std::vector<BlockTridiagonalMatrix<Scalar>> interiors;
    BlockArena<Scalar> coupling_left;
    BlockArena<Scalar> coupling_right;
    std::vector<BlockRhs<Scalar>> factors;

    Index size() const { return static_cast<Index>(interiors.size()); }
    Index block_size() const { return coupling_left.rows(); }
};

/// Result of reordering a matrix by a plan: the interior batch plus the
/// separator diagonal blocks A_ll. Separators are never adjacent, so A_ll
/// has no off-diagonal blocks.
template <typename Scalar = double>
struct SplitSystem {
    SegmentBatch<Scalar> segments;
    BlockArena<Scalar> separator_diag;
};

template <typename Scalar>
SplitSystem<Scalar> permute_split(const BlockTridiagonalMatrix<Scalar>& A, const PartitionPlan& plan) {
    if (plan.num_blocks != A.num_blocks())
        throw DimensionMismatch("partition plan is for " + std::to_string(plan.num_blocks) +
                                " blocks, matrix has " + std::to_string(A.num_blocks()));
    const Index n = A.block_size();
    const Index K = plan.num_segments();
    SplitSystem<Scalar> out;
    out.separator_diag = BlockArena<Scalar>(plan.num_separators(), n, n);
    for (Index p = 0; p < plan.num_separators(); ++p)
        out.separator_diag[p] = A.diag(plan.separators[static_cast<std::size_t>(p)]);

    auto& batch = out.segments;
    batch.coupling_left = BlockArena<Scalar>(K, n, n);
    batch.coupling_right = BlockArena<Scalar>(K, n, n);
    batch.interiors.reserve(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
        const Segment seg = plan.segments[static_cast<std::size_t>(k)];
        BlockTridiagonalMatrix<Scalar> interior(seg.length(), n);
        for (Index j = 0; j < seg.length(); ++j) interior.diag(j) = A.diag(seg.begin + j);
        for (Index j = 0; j + 1 < seg.length(); ++j) interior.sub(j) = A.sub(seg.begin + j);
        batch.interiors.push_back(std::move(interior));
        batch.coupling_left[k] = A.sub(seg.begin - 1);
        batch.coupling_right[k] = A.sub(seg.end - 1);
    }
    return out;
}

/// Interior and separator parts of a right-hand side, in plan order.
template <typename Scalar = double>
struct SplitRhs {
    std::vector<BlockRhs<Scalar>> interior;
    BlockRhs<Scalar> separators;
};

template <typename Scalar>
SplitRhs<Scalar> split_rhs(const BlockRhs<Scalar>& B, const PartitionPlan& plan) {
    if (plan.num_blocks != B.num_blocks())
        throw DimensionMismatch("right-hand side has " + std::to_string(B.num_blocks()) +
                                " blocks, plan expects " + std::to_string(plan.num_blocks));
    const Index n = B.block_size();
    const Index d = B.cols();
    SplitRhs<Scalar> out;
    out.separators = BlockRhs<Scalar>(plan.num_separators(), n, d);
    for (Index p = 0; p < plan.num_separators(); ++p)
        out.separators[p] = B[plan.separators[static_cast<std::size_t>(p)]];
    out.interior.reserve(plan.segments.size());
    for (const Segment& seg : plan.segments) {
        BlockRhs<Scalar> part(seg.length(), n, d);
        for (Index j = 0; j < seg.length(); ++j) part[j] = B[seg.begin + j];
        out.interior.push_back(std::move(part));
    }
    return out;
}

/// Inverse of split_rhs: merges interior and separator pieces back into the
/// original block order.
template <typename Scalar>
BlockRhs<Scalar> assemble_solution(std::span<const BlockRhs<Scalar>> interior,
                                   const BlockRhs<Scalar>& separators, const PartitionPlan& plan) {
    if (separators.num_blocks() != plan.num_separators() ||
        static_cast<Index>(interior.size()) != plan.num_segments())
        throw DimensionMismatch("assemble_solution: pieces do not match the plan");
    const Index n = separators.block_size();
    const Index d = separators.cols();
    BlockRhs<Scalar> X(plan.num_blocks, n, d);
    for (Index p = 0; p < plan.num_separators(); ++p)
        X[plan.separators[static_cast<std::size_t>(p)]] = separators[p];
    for (std::size_t k = 0; k < interior.size(); ++k) {
        const Segment seg = plan.segments[k];
        if (interior[k].num_blocks() != seg.length() || interior[k].block_size() != n ||
            interior[k].cols() != d)
            throw DimensionMismatch("assemble_solution: segment " + std::to_string(k) +
                                    " has the wrong shape");
        for (Index j = 0; j < seg.length(); ++j) X[seg.begin + j] = interior[k][j];
    }
    return X;
}

template <typename Scalar>
BlockRhs<Scalar> assemble_solution(const std::vector<BlockRhs<Scalar>>& interior,
                                   const BlockRhs<Scalar>& separators, const PartitionPlan& plan) {
    return assemble_solution(std::span<const BlockRhs<Scalar>>(interior), separators, plan);
}

/// Solves A_uu F = A_lu for every segment of a batch whose interiors are
/// already factored. The two coupling block-columns form one 2n-column
/// right-hand side per segment.
template <typename Scalar>
void compute_intermediate_factors(SegmentBatch<Scalar>& batch) {
    const Index n = batch.block_size();
    batch.factors.clear();
    batch.factors.reserve(static_cast<std::size_t>(batch.size()));
    for (Index k = 0; k < batch.size(); ++k) {
        const Index J = batch.interiors[static_cast<std::size_t>(k)].num_blocks();
        BlockRhs<Scalar> F(J, n, 2 * n);
        F[0].leftCols(n) = batch.coupling_left[k];
        F[J - 1].rightCols(n) = batch.coupling_right[k].transpose();
        batch.factors.push_back(std::move(F));
    }
    solve_btd_batch(std::span<const BlockTridiagonalMatrix<Scalar>>(batch.interiors),
                    std::span<BlockRhs<Scalar>>(batch.factors));
}

/// S = A_ll - Assemble({A_lu^(k)T F^(k)}). Contributions of neighbouring
/// segments to a shared separator accumulate.
template <typename Scalar>
BlockTridiagonalMatrix<Scalar> compute_schur(const BlockArena<Scalar>& separator_diag,
                                             const SegmentBatch<Scalar>& batch,
                                             const PartitionPlan& plan) {
    const Index n = batch.block_size();
    const Index K = batch.size();
    const Index P = plan.num_separators();
    if (separator_diag.count() != P || K != plan.num_segments() ||
        static_cast<Index>(batch.factors.size()) != K)
        throw DimensionMismatch("compute_schur: separator blocks, segments and plan disagree");

    // Per-segment 2n x 2n update: top rows belong to s_k, bottom to s_{k+1}.
    BlockArena<Scalar> update(K, 2 * n, 2 * n);
    KernelBatchView<Scalar> top(n, 2 * n), bottom(n, 2 * n);
    KernelBatchView<const Scalar> left(n, n), right(n, n), first(n, 2 * n), last(n, 2 * n);
    for (Index k = 0; k < K; ++k) {
        const auto& F = batch.factors[static_cast<std::size_t>(k)];
        top.push_back(update.block_data(k));
        bottom.push_back(update.block_data(k) + n * 2 * n);
        left.push_back(batch.coupling_left.block_data(k));
        right.push_back(batch.coupling_right.block_data(k));
        first.push_back(F.arena().block_data(0));
        last.push_back(F.arena().block_data(F.num_blocks() - 1));
    }
    batched_gemm_acc(top, left, first, true, false, Scalar(1), Scalar(0));
    batched_gemm_acc(bottom, right, last, false, false, Scalar(1), Scalar(0));

    BlockTridiagonalMatrix<Scalar> S(P, n);
    for (Index p = 0; p < P; ++p) S.diag(p) = separator_diag[p];
    for (Index k = 0; k < K; ++k) {
        const auto U = update[k];
        S.diag(k) -= U.topLeftCorner(n, n);
        S.diag(k + 1) -= U.bottomRightCorner(n, n);
        S.sub(k) = -U.bottomLeftCorner(n, n);
    }
    for (Index p = 0; p < P; ++p) {
        auto D = S.diag(p);
        Block<Scalar> sym = (D + D.transpose()) / Scalar(2);
        D = sym;
    }
    return S;
}

/// B_l <- B_l + Assemble({-F^(k)T B_u^(k)}), in place on B_l.
template <typename Scalar>
void compute_separator_rhs(const SegmentBatch<Scalar>& batch,
                           std::span<const BlockRhs<Scalar>> interior_rhs,
                           BlockRhs<Scalar>& separator_rhs, const PartitionPlan& plan) {
    const Index n = batch.block_size();
    const Index K = batch.size();
    if (static_cast<Index>(interior_rhs.size()) != K || separator_rhs.num_blocks() != plan.num_separators() ||
        K != plan.num_segments() || separator_rhs.block_size() != n)
        throw DimensionMismatch("compute_separator_rhs: pieces do not match the plan");
    const Index d = separator_rhs.cols();
    for (Index k = 0; k < K; ++k) {
        const auto& Bu = interior_rhs[static_cast<std::size_t>(k)];
        if (Bu.cols() != d || Bu.block_size() != n ||
            Bu.num_blocks() != batch.factors[static_cast<std::size_t>(k)].num_blocks())
            throw DimensionMismatch("compute_separator_rhs: segment " + std::to_string(k) +
                                    " right-hand side is not conformal");
    }

    // F^(k) and B_u^(k) are contiguous row-major (J n) x 2n and (J n) x d.
    BlockArena<Scalar> contrib(K, 2 * n, d);
    batched(K, [&](Index k) {
        const auto& F = batch.factors[static_cast<std::size_t>(k)];
        const auto& Bu = interior_rhs[static_cast<std::size_t>(k)];
        const Index rows = F.num_blocks() * n;
        ConstBlockMap<Scalar> Fk(F.arena().block_data(0), rows, 2 * n);
        ConstBlockMap<Scalar> Bk(Bu.arena().block_data(0), rows, d);
        gemm_acc(contrib[k], Fk, Bk, true, false, Scalar(-1), Scalar(0));
    });
    for (Index k = 0; k < K; ++k) {
        separator_rhs[k] += contrib[k].topRows(n);
        separator_rhs[k + 1] += contrib[k].bottomRows(n);
    }
}

template <typename Scalar>
void compute_separator_rhs(const SegmentBatch<Scalar>& batch,
                           const std::vector<BlockRhs<Scalar>>& interior_rhs,
                           BlockRhs<Scalar>& separator_rhs, const PartitionPlan& plan) {
    compute_separator_rhs(batch, std::span<const BlockRhs<Scalar>>(interior_rhs), separator_rhs, plan);
}

/// B_u^(k) <- B_u^(k) - A_lu^(k) X_l^(k), in place. Only the first and last
/// block rows of each segment change.
template <typename Scalar>
void update_boundary(const SegmentBatch<Scalar>& batch, std::span<BlockRhs<Scalar>> interior_rhs,
                     const BlockRhs<Scalar>& separator_solution, const PartitionPlan& plan) {
    const Index K = batch.size();
    if (static_cast<Index>(interior_rhs.size()) != K || K != plan.num_segments() ||
        separator_solution.num_blocks() != plan.num_separators() ||
        separator_solution.block_size() != batch.block_size())
        throw DimensionMismatch("update_boundary: pieces do not match the plan");
    for (Index k = 0; k < K; ++k) {
        const auto& Bu = interior_rhs[static_cast<std::size_t>(k)];
        if (Bu.cols() != separator_solution.cols() || Bu.block_size() != batch.block_size())
            throw DimensionMismatch("update_boundary: segment " + std::to_string(k) +
                                    " right-hand side is not conformal");
    }
    batched(K, [&](Index k) {
        auto& Bu = interior_rhs[static_cast<std::size_t>(k)];
        gemm_acc(Bu[0], batch.coupling_left[k], separator_solution[k], false, false, Scalar(-1),
                 Scalar(1));
        gemm_acc(Bu[Bu.num_blocks() - 1], batch.coupling_right[k], separator_solution[k + 1], true,
                 false, Scalar(-1), Scalar(1));
    });
}

template <typename Scalar>
void update_boundary(const SegmentBatch<Scalar>& batch, std::vector<BlockRhs<Scalar>>& interior_rhs,
                     const BlockRhs<Scalar>& separator_solution, const PartitionPlan& plan) {
    update_boundary(batch, std::span<BlockRhs<Scalar>>(interior_rhs), separator_solution, plan);
}

/// One level of the hierarchy. `schur` is the (unfactored) Schur complement
/// handed to the next level.
template <typename Scalar = double>
struct FactorLevel {
    PartitionPlan plan;
    SegmentBatch<Scalar> segments;
    BlockTridiagonalMatrix<Scalar> schur;
};

/// Everything recursive_solve needs: factored interiors and intermediate
/// factors per level, and the serially factored coarsest Schur complement.
template <typename Scalar = double>
struct FactorHierarchy {
    RecursionConfig config;
    Index num_blocks = 0;
    Index block_size = 0;
    std::vector<FactorLevel<Scalar>> levels;
    BlockTridiagonalMatrix<Scalar> base;

    Index num_levels() const { return static_cast<Index>(levels.size()); }
};

/// True when a matrix of `num_blocks` rows is factored serially.
inline bool is_base_case(Index num_blocks, const RecursionConfig& cfg) {
    if (num_blocks < 3) return true;
    if (cfg.auto_crossover) return plan_partition(num_blocks, cfg).num_segments() < 2;
    return num_blocks <= cfg.n_star;
}

template <typename Scalar>
FactorHierarchy<Scalar> recursive_factorize(const BlockTridiagonalMatrix<Scalar>& A,
                                            const RecursionConfig& cfg = {}) {
    cfg.validate();
    FactorHierarchy<Scalar> h;
    h.config = cfg;
    h.num_blocks = A.num_blocks();
    h.block_size = A.block_size();

    BlockTridiagonalMatrix<Scalar> current = A;
    while (!is_base_case(current.num_blocks(), cfg)) {
        const Index level = h.num_levels();
        if (level >= cfg.max_levels) throw LevelOverflow(cfg.max_levels);
        FactorLevel<Scalar> lvl;
        lvl.plan = plan_partition(current.num_blocks(), cfg);
        auto split = permute_split(current, lvl.plan);
        lvl.segments = std::move(split.segments);
        try {
            factorize_btd_batch(std::span<BlockTridiagonalMatrix<Scalar>>(lvl.segments.interiors));
        } catch (const NotPositiveDefinite& e) {
            throw e.at_level(level);
        }
        compute_intermediate_factors(lvl.segments);
        lvl.schur = compute_schur(split.separator_diag, lvl.segments, lvl.plan);
        current = lvl.schur;
        h.levels.push_back(std::move(lvl));
    }
    try {
        serial_factorize(current);
    } catch (const NotPositiveDefinite& e) {
        throw e.at_level(h.num_levels());
    }
    h.base = std::move(current);
    return h;
}

namespace detail {
template <typename Scalar>
BlockRhs<Scalar> solve_from_level(const FactorHierarchy<Scalar>& h, Index level, BlockRhs<Scalar> B) {
    if (level == h.num_levels()) {
        serial_solve(h.base, B);
        return B;
    }
    const auto& lvl = h.levels[static_cast<std::size_t>(level)];
    auto parts = split_rhs(B, lvl.plan);
    compute_separator_rhs(lvl.segments, parts.interior, parts.separators, lvl.plan);
    BlockRhs<Scalar> Xl = solve_from_level(h, level + 1, std::move(parts.separators));
    update_boundary(lvl.segments, parts.interior, Xl, lvl.plan);
    solve_btd_batch(std::span<const BlockTridiagonalMatrix<Scalar>>(lvl.segments.interiors),
                    std::span<BlockRhs<Scalar>>(parts.interior));
    return assemble_solution(parts.interior, Xl, lvl.plan);
}
} // namespace detail

/// Solves A X = B with a hierarchy from recursive_factorize. The hierarchy
/// is only read, so independent right-hand sides may be solved concurrently.
template <typename Scalar>
BlockRhs<Scalar> recursive_solve(const FactorHierarchy<Scalar>& h, const BlockRhs<Scalar>& B) {
    if (B.num_blocks() != h.num_blocks || B.block_size() != h.block_size)
        throw DimensionMismatch("right-hand side is " + std::to_string(B.num_blocks()) + " blocks of " +
                                std::to_string(B.block_size()) + " rows, system is " +
                                std::to_string(h.num_blocks) + " blocks of " +
                                std::to_string(h.block_size));
    return detail::solve_from_level(h, 0, B);
}

} // namespace blocktri
