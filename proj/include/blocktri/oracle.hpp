#pragma once

// Brute-force references for tests and the `verify` command. Plain loops
// only, so they share no code path with the structured solver.

#include <cmath>
#include <string>
#include <vector>

#include "blocktri/core.hpp"
#include "blocktri/errors.hpp"

namespace blocktri::oracle {

/// Largest dense dimension the oracles are meant for.
inline constexpr Index kMaxDenseDim = 4096;

/// Unblocked dense Cholesky of a symmetric matrix; returns L. Accumulates
/// U = L^T so every inner product runs down a contiguous column.
template <typename Scalar>
DenseMatrix<Scalar> dense_cholesky(const DenseMatrix<Scalar>& A) {
    const Index m = A.rows();
    if (A.cols() != m) throw DimensionMismatch("dense_cholesky needs a square matrix");
    DenseMatrix<Scalar> U = DenseMatrix<Scalar>::Zero(m, m);
    for (Index j = 0; j < m; ++j) {
        const Scalar* uj = &U(0, j);
        Scalar s = A(j, j);
        for (Index k = 0; k < j; ++k) s -= uj[k] * uj[k];
        if (!(s > Scalar(0))) throw NotPositiveDefinite(j + 1);
        const Scalar d = std::sqrt(s);
        U(j, j) = d;
        for (Index i = j + 1; i < m; ++i) {
            const Scalar* ui = &U(0, i);
            Scalar t = A(j, i);
            for (Index k = 0; k < j; ++k) t -= ui[k] * uj[k];
            U(j, i) = t / d;
        }
    }
    return U.transpose();
}

/// True when dense_cholesky succeeds.
template <typename Scalar>
bool is_spd(const DenseMatrix<Scalar>& A) {
    try {
        dense_cholesky(A);
        return true;
    } catch (const NotPositiveDefinite&) {
        return false;
    }
}

/// Solves L L^T X = B given the dense factor L.
template <typename Scalar>
DenseMatrix<Scalar> cholesky_solve(const DenseMatrix<Scalar>& L, const DenseMatrix<Scalar>& B) {
    const Index m = L.rows();
    if (B.rows() != m) throw DimensionMismatch("cholesky_solve: row count mismatch");
    const DenseMatrix<Scalar> U = L.transpose();
    DenseMatrix<Scalar> X = B;
    for (Index c = 0; c < X.cols(); ++c) {
        Scalar* x = &X(0, c);
        for (Index i = 0; i < m; ++i) {
            const Scalar* ui = &U(0, i);
            Scalar t = x[i];
            for (Index k = 0; k < i; ++k) t -= ui[k] * x[k];
            x[i] = t / ui[i];
        }
        for (Index i = m - 1; i >= 0; --i) {
            const Scalar* li = &L(0, i);
            Scalar t = x[i];
            for (Index k = i + 1; k < m; ++k) t -= li[k] * x[k];
            x[i] = t / li[i];
        }
    }
    return X;
}

template <typename Scalar>
DenseMatrix<Scalar> dense_solve(const DenseMatrix<Scalar>& A, const DenseMatrix<Scalar>& B) {
    return cholesky_solve(dense_cholesky(A), B);
}

/// Scalar row indices covered by the given block indices.
inline std::vector<Index> block_rows(const std::vector<Index>& blocks, Index block_size) {
    std::vector<Index> rows;
    rows.reserve(blocks.size() * static_cast<std::size_t>(block_size));
    for (Index b : blocks)
        for (Index r = 0; r < block_size; ++r) rows.push_back(b * block_size + r);
    return rows;
}

/// Schur complement A_ll - A_lu^T A_uu^{-1} A_lu after eliminating the rows
/// and columns in `interior`. The remaining rows keep their original order.
template <typename Scalar>
DenseMatrix<Scalar> dense_schur(const DenseMatrix<Scalar>& A, const std::vector<Index>& interior) {
    const Index m = A.rows();
    std::vector<bool> eliminated(static_cast<std::size_t>(m), false);
    for (Index i : interior) {
        if (i < 0 || i >= m) throw DimensionMismatch("dense_schur: interior index out of range");
        eliminated[static_cast<std::size_t>(i)] = true;
    }
    std::vector<Index> kept;
    for (Index i = 0; i < m; ++i)
        if (!eliminated[static_cast<std::size_t>(i)]) kept.push_back(i);

    const Index nu = static_cast<Index>(interior.size());
    const Index nl = static_cast<Index>(kept.size());
    DenseMatrix<Scalar> All(nl, nl), Auu(nu, nu), Alu(nu, nl);
    for (Index r = 0; r < nl; ++r)
        for (Index c = 0; c < nl; ++c) All(r, c) = A(kept[r], kept[c]);
    if (nu == 0) return All;
    for (Index r = 0; r < nu; ++r) {
        for (Index c = 0; c < nu; ++c) Auu(r, c) = A(interior[r], interior[c]);
        for (Index c = 0; c < nl; ++c) Alu(r, c) = A(interior[r], kept[c]);
    }
    const DenseMatrix<Scalar> W = dense_solve(Auu, Alu);
    DenseMatrix<Scalar> S = All;
    for (Index r = 0; r < nl; ++r)
        for (Index c = 0; c < nl; ++c) {
            Scalar t(0);
            for (Index k = 0; k < nu; ++k) t += Alu(k, r) * W(k, c);
            S(r, c) -= t;
        }
    return S;
}

/// Thomas algorithm for a scalar tridiagonal system. `lower[i]` is A(i+1,i),
/// `upper[i]` is A(i,i+1).
template <typename Scalar>
std::vector<Scalar> thomas_scalar(const std::vector<Scalar>& lower, const std::vector<Scalar>& diag,
                                  const std::vector<Scalar>& upper, const std::vector<Scalar>& rhs) {
    const std::size_t m = diag.size();
    if (m == 0 || rhs.size() != m || lower.size() + 1 != m || upper.size() + 1 != m)
        throw DimensionMismatch("thomas_scalar: inconsistent band lengths");
    std::vector<Scalar> c(m, Scalar(0)), x(m);
    Scalar pivot = diag[0];
    if (pivot == Scalar(0)) throw ZeroPivot(0);
    x[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < m; ++i) {
        c[i - 1] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if (pivot == Scalar(0)) throw ZeroPivot(static_cast<std::ptrdiff_t>(i));
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
    }
    for (std::size_t i = m - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return x;
}

} // namespace blocktri::oracle
