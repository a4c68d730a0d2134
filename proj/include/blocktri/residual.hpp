#pragma once

#include <algorithm>
#include <cmath>

#include "blocktri/core.hpp"
#include "blocktri/dense_kernels.hpp"

namespace blocktri {

/// Y = A X using the block structure (one pass of block SpMV).
template <typename Scalar>
BlockRhs<Scalar> block_multiply(const BlockTridiagonalMatrix<Scalar>& A, const BlockRhs<Scalar>& X) {
    if (X.num_blocks() != A.num_blocks() || X.block_size() != A.block_size())
        throw DimensionMismatch("block_multiply: operand is not conformal with the matrix");
    BlockRhs<Scalar> Y(A.num_blocks(), A.block_size(), X.cols());
    for (Index i = 0; i < A.num_blocks(); ++i) {
        Y[i].noalias() = A.diag(i) * X[i];
        if (i > 0) Y[i].noalias() += A.sub(i - 1) * X[i - 1];
        if (i + 1 < A.num_blocks()) Y[i].noalias() += A.sub(i).transpose() * X[i + 1];
    }
    return Y;
}

struct ResidualReport {
    double absolute = 0;  ///< max over columns of ||A x - b||_2
    double relative = 0;  ///< max over columns of ||A x - b||_2 / ||b||_2
};

/// Column-wise residual norms; a zero right-hand-side column contributes
/// its absolute residual to `relative`.
template <typename Scalar>
ResidualReport residual_report(const BlockTridiagonalMatrix<Scalar>& A, const BlockRhs<Scalar>& X,
                               const BlockRhs<Scalar>& B) {
    if (B.num_blocks() != A.num_blocks() || B.block_size() != A.block_size() || B.cols() != X.cols())
        throw DimensionMismatch("residual_report: right-hand side is not conformal");
    const BlockRhs<Scalar> AX = block_multiply(A, X);
    ResidualReport report;
    for (Index c = 0; c < B.cols(); ++c) {
        Scalar r2(0), b2(0);
        for (Index i = 0; i < A.num_blocks(); ++i) {
            r2 += (AX[i].col(c) - B[i].col(c)).squaredNorm();
            b2 += B[i].col(c).squaredNorm();
        }
        const double r = std::sqrt(static_cast<double>(r2));
        const double b = std::sqrt(static_cast<double>(b2));
        report.absolute = std::max(report.absolute, r);
        report.relative = std::max(report.relative, b > 0 ? r / b : r);
    }
    return report;
}

} // namespace blocktri
