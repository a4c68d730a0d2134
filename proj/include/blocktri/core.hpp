#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "blocktri/errors.hpp"

namespace blocktri {

using Index = Eigen::Index;

/// Storage order of every block kept in an arena.
template <typename Scalar>
using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using BlockMap = Eigen::Map<Block<Scalar>>;
template <typename Scalar>
using ConstBlockMap = Eigen::Map<const Block<Scalar>>;

/// Column-major dense matrix used for assembled systems and oracles.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Relative tolerance on max |D - D^T| for diagonal blocks.
inline constexpr double kSymmetryTolerance = 1e-12;

/// `count` equally shaped row-major blocks laid out back to back.
template <typename Scalar>
class BlockArena {
public:
    BlockArena() = default;
    BlockArena(Index count, Index rows, Index cols)
        : count_(count), rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(count * rows * cols), Scalar(0)) { }

    Index count() const { return count_; }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index stride() const { return rows_ * cols_; }

    BlockMap<Scalar> operator[](Index i) { return {data_.data() + i * stride(), rows_, cols_}; }
    ConstBlockMap<Scalar> operator[](Index i) const {
        return {data_.data() + i * stride(), rows_, cols_};
    }

    Scalar* block_data(Index i) { return data_.data() + i * stride(); }
    const Scalar* block_data(Index i) const { return data_.data() + i * stride(); }

    std::span<Scalar> values() { return data_; }
    std::span<const Scalar> values() const { return data_; }

    void set_zero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

    friend bool operator==(const BlockArena&, const BlockArena&) = default;

private:
    Index count_ = 0;
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Scalar> data_;
};

/// Symmetric block-tridiagonal matrix with N diagonal blocks of size n x n.
///
/// Only the lower off-diagonal blocks are stored: `sub(i)` is A(i+1, i) and
/// the upper block A(i, i+1) is implied as its transpose. Block indices are
/// 0-based.
template <typename Scalar = double>
class BlockTridiagonalMatrix {
public:
    using scalar_type = Scalar;

    BlockTridiagonalMatrix() = default;

    /// Zero matrix; diag and sub blocks are filled in by the caller.
    BlockTridiagonalMatrix(Index num_blocks, Index block_size)
        : diag_(checked_count(num_blocks, block_size), block_size, block_size),
          sub_(num_blocks - 1, block_size, block_size) { }

    Index num_blocks() const { return diag_.count(); }
    Index block_size() const { return diag_.rows(); }
    Index dim() const { return num_blocks() * block_size(); }

    BlockMap<Scalar> diag(Index i) { return diag_[i]; }
    ConstBlockMap<Scalar> diag(Index i) const { return diag_[i]; }
    BlockMap<Scalar> sub(Index i) { return sub_[i]; }
    ConstBlockMap<Scalar> sub(Index i) const { return sub_[i]; }

    BlockArena<Scalar>& diag_arena() { return diag_; }
    const BlockArena<Scalar>& diag_arena() const { return diag_; }
    BlockArena<Scalar>& sub_arena() { return sub_; }
    const BlockArena<Scalar>& sub_arena() const { return sub_; }

    /// Largest max |D - D^T| / max |D| over the diagonal blocks.
    Scalar max_relative_asymmetry() const {
        Scalar worst(0);
        for (Index i = 0; i < num_blocks(); ++i) worst = std::max(worst, relative_asymmetry(i));
        return worst;
    }

    /// Replaces each diagonal block by (D + D^T)/2 after checking it is
    /// symmetric to `tol` relative to its largest entry.
    void symmetrize(double tol = kSymmetryTolerance) {
        for (Index i = 0; i < num_blocks(); ++i) {
            const Scalar rel = relative_asymmetry(i);
            if (rel > Scalar(tol)) throw AsymmetricBlock(i, static_cast<double>(rel), tol);
            auto D = diag(i);
            Block<Scalar> sym = (D + D.transpose()) / Scalar(2);
            D = sym;
        }
    }

    friend bool operator==(const BlockTridiagonalMatrix&, const BlockTridiagonalMatrix&) = default;

private:
    static Index checked_count(Index num_blocks, Index block_size) {
        if (num_blocks < 1 || block_size < 1)
            throw DimensionMismatch("block-tridiagonal matrix needs N >= 1 and n >= 1");
        return num_blocks;
    }

    Scalar relative_asymmetry(Index i) const {
        const auto D = diag(i);
        const Scalar scale = D.cwiseAbs().maxCoeff();
        if (scale == Scalar(0)) return Scalar(0);
        return (D - D.transpose()).cwiseAbs().maxCoeff() / scale;
    }

    BlockArena<Scalar> diag_;
    BlockArena<Scalar> sub_;
};

/// Right-hand side or solution partitioned conformally with a
/// BlockTridiagonalMatrix: N panels of n x d.
template <typename Scalar = double>
class BlockRhs {
public:
    using scalar_type = Scalar;

    BlockRhs() = default;
    BlockRhs(Index num_blocks, Index block_size, Index cols)
        : panels_(num_blocks, block_size, cols) {
        if (num_blocks < 1 || block_size < 1 || cols < 1)
            throw DimensionMismatch("block right-hand side needs N, n, d >= 1");
    }

    Index num_blocks() const { return panels_.count(); }
    Index block_size() const { return panels_.rows(); }
    Index cols() const { return panels_.cols(); }

    BlockMap<Scalar> operator[](Index i) { return panels_[i]; }
    ConstBlockMap<Scalar> operator[](Index i) const { return panels_[i]; }

    BlockArena<Scalar>& arena() { return panels_; }
    const BlockArena<Scalar>& arena() const { return panels_; }

    /// Stacks the panels into an (N n) x d dense matrix.
    DenseMatrix<Scalar> to_dense() const {
        const Index n = block_size();
        DenseMatrix<Scalar> out(num_blocks() * n, cols());
        for (Index i = 0; i < num_blocks(); ++i) out.middleRows(i * n, n) = panels_[i];
        return out;
    }

    template <typename Derived>
    static BlockRhs from_dense(const Eigen::MatrixBase<Derived>& dense, Index block_size) {
        if (block_size < 1 || dense.rows() % block_size != 0)
            throw DimensionMismatch("dense right-hand side rows are not a multiple of n");
        BlockRhs out(dense.rows() / block_size, block_size, dense.cols());
        for (Index i = 0; i < out.num_blocks(); ++i)
            out[i] = dense.middleRows(i * block_size, block_size);
        return out;
    }

    friend bool operator==(const BlockRhs&, const BlockRhs&) = default;

private:
    BlockArena<Scalar> panels_;
};

/// Validated constructor from explicit block lists. Diagonal blocks are
/// symmetrized after the asymmetry check.
template <typename Scalar>
BlockTridiagonalMatrix<Scalar> make_block_tridiagonal(Index num_blocks, Index block_size,
                                                      std::span<const DenseMatrix<Scalar>> diag,
                                                      std::span<const DenseMatrix<Scalar>> sub) {
    if (num_blocks < 1 || block_size < 1)
        throw DimensionMismatch("block-tridiagonal matrix needs N >= 1 and n >= 1");
    if (static_cast<Index>(diag.size()) != num_blocks)
        throw DimensionMismatch("expected " + std::to_string(num_blocks) + " diagonal blocks, got " +
                                std::to_string(diag.size()));
    if (static_cast<Index>(sub.size()) != num_blocks - 1)
        throw DimensionMismatch("expected " + std::to_string(num_blocks - 1) +
                                " sub-diagonal blocks, got " + std::to_string(sub.size()));
    auto check = [&](const DenseMatrix<Scalar>& b, const char* what, std::size_t i) {
        if (b.rows() != block_size || b.cols() != block_size)
            throw DimensionMismatch(std::string(what) + " block " + std::to_string(i) + " is " +
                                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                                    ", expected " + std::to_string(block_size) + "x" +
                                    std::to_string(block_size));
    };
    BlockTridiagonalMatrix<Scalar> A(num_blocks, block_size);
    for (std::size_t i = 0; i < diag.size(); ++i) {
        check(diag[i], "diagonal", i);
        A.diag(static_cast<Index>(i)) = diag[i];
    }
    for (std::size_t i = 0; i < sub.size(); ++i) {
        check(sub[i], "sub-diagonal", i);
        A.sub(static_cast<Index>(i)) = sub[i];
    }
    A.symmetrize();
    return A;
}

template <typename Scalar>
BlockTridiagonalMatrix<Scalar> make_block_tridiagonal(Index num_blocks, Index block_size,
                                                      const std::vector<DenseMatrix<Scalar>>& diag,
                                                      const std::vector<DenseMatrix<Scalar>>& sub) {
    return make_block_tridiagonal<Scalar>(num_blocks, block_size,
                                          std::span<const DenseMatrix<Scalar>>(diag),
                                          std::span<const DenseMatrix<Scalar>>(sub));
}

/// Materializes the full symmetric (N n) x (N n) matrix. Upper blocks are
/// written as transposes of the stored lower blocks.
template <typename Scalar>
DenseMatrix<Scalar> assemble_dense(const BlockTridiagonalMatrix<Scalar>& A) {
    const Index n = A.block_size();
    DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(A.dim(), A.dim());
    for (Index i = 0; i < A.num_blocks(); ++i) out.block(i * n, i * n, n, n) = A.diag(i);
    for (Index i = 0; i + 1 < A.num_blocks(); ++i) {
        out.block((i + 1) * n, i * n, n, n) = A.sub(i);
        out.block(i * n, (i + 1) * n, n, n) = A.sub(i).transpose();
    }
    return out;
}

/// Reads the block-tridiagonal part of a dense matrix back into block form.
/// No symmetry validation; used to round-trip assembled matrices.
template <typename Derived>
BlockTridiagonalMatrix<typename Derived::Scalar> extract_block_tridiagonal(
    const Eigen::MatrixBase<Derived>& dense, Index block_size) {
    using Scalar = typename Derived::Scalar;
    if (block_size < 1 || dense.rows() != dense.cols() || dense.rows() % block_size != 0)
        throw DimensionMismatch("dense matrix is not square with a multiple of n rows");
    BlockTridiagonalMatrix<Scalar> A(dense.rows() / block_size, block_size);
    const Index n = block_size;
    for (Index i = 0; i < A.num_blocks(); ++i) A.diag(i) = dense.block(i * n, i * n, n, n);
    for (Index i = 0; i + 1 < A.num_blocks(); ++i) A.sub(i) = dense.block((i + 1) * n, i * n, n, n);
    return A;
}

/// Half-open range [begin, end) of interior block indices.
struct Segment {
    Index begin = 0;
    Index end = 0;

    Index length() const { return end - begin; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Separator/interior split of one recursion level. Indices are 0-based.
/// The first and last block are always separators, and segment k lies
/// strictly between separators k and k+1.
struct PartitionPlan {
    Index num_blocks = 0;
    std::vector<Index> separators;
    std::vector<Segment> segments;

    Index num_separators() const { return static_cast<Index>(separators.size()); }
    Index num_segments() const { return static_cast<Index>(segments.size()); }
    Index max_segment_length() const {
        Index m = 0;
        for (const auto& s : segments) m = std::max(m, s.length());
        return m;
    }

    /// Throws DimensionMismatch when the plan violates its invariants.
    void validate() const {
        const Index P = num_separators();
        if (P < 2 || separators.front() != 0 || separators.back() != num_blocks - 1)
            throw DimensionMismatch("partition plan must have both endpoints as separators");
        if (num_segments() != P - 1)
            throw DimensionMismatch("partition plan needs exactly P - 1 segments");
        for (Index k = 0; k + 1 < P; ++k) {
            const Segment& s = segments[static_cast<std::size_t>(k)];
            if (s.begin != separators[k] + 1 || s.end != separators[k + 1] || s.length() < 1)
                throw DimensionMismatch("partition segment " + std::to_string(k) +
                                        " does not fill the gap between its separators");
        }
    }

    friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

} // namespace blocktri
