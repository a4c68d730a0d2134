#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseQR>

#include "blocktri/core.hpp"
#include "blocktri/kalman.hpp"
#include "blocktri/synthgen.hpp"

namespace blocktri::support {

inline double max_abs(const DenseMatrix<double>& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

/// max |X - Y| / max |Y|.
inline double rel_max_diff(const DenseMatrix<double>& X, const DenseMatrix<double>& Y) {
    const double scale = std::max(max_abs(Y), 1e-300);
    return (X - Y).cwiseAbs().maxCoeff() / scale;
}

inline double rel_max_diff(const BlockRhs<double>& X, const BlockRhs<double>& Y) {
    return rel_max_diff(X.to_dense(), Y.to_dense());
}

inline DenseMatrix<double> random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix<double> M(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) M(r, c) = u(rng);
    return M;
}

/// Random SPD matrix M M^T + m I.
inline DenseMatrix<double> random_spd(Index m, std::mt19937_64& rng) {
    const DenseMatrix<double> M = random_matrix(m, m, rng);
    DenseMatrix<double> S = M * M.transpose();
    S.diagonal().array() += double(m);
    return (0.5 * (S + S.transpose())).eval();
}

/// Minimizer of 1/2 ||H x - z||^2_{R^-1} + 1/2 ||G x - zeta||^2_{Q^-1} over
/// the stacked trajectory, by sparse QR of the whitened stacked operator.
/// Independent of the normal-equation route.
inline Eigen::VectorXd kalman_least_squares(const kalman::StateSpaceModel& model) {
    const Index N = model.horizon, n = model.state_dim, m = model.obs_dim;
    const Index rows = N * m + N * n;
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
    const auto put = [&](Index r0, Index c0, const Eigen::MatrixXd& M) {
        for (Index c = 0; c < M.cols(); ++c)
            for (Index r = 0; r < M.rows(); ++r)
                if (M(r, c) != 0.0) entries.emplace_back(int(r0 + r), int(c0 + c), M(r, c));
    };
    for (Index k = 0; k < N; ++k) {
        const auto sk = static_cast<std::size_t>(k);
        const Eigen::MatrixXd LR = model.measurement_cov[sk].llt().matrixL();
        const Eigen::MatrixXd LQ = model.process_cov[sk].llt().matrixL();
        const auto R = LR.triangularView<Eigen::Lower>();
        const auto Q = LQ.triangularView<Eigen::Lower>();
        // Measurement rows: L_R^{-1} (H_k x_k - z_k).
        put(k * m, k * n, R.solve(model.observation[sk]));
        rhs.segment(k * m, m) = R.solve(model.measurements[sk]);
        // Process rows: L_Q^{-1} (x_k - G_k x_{k-1} - zeta_k).
        const Index r0 = N * m + k * n;
        put(r0, k * n, Q.solve(Eigen::MatrixXd::Identity(n, n)));
        if (k > 0) put(r0, (k - 1) * n, -Eigen::MatrixXd(Q.solve(model.transition[sk])));
        rhs.segment(r0, n) = Q.solve(model.prior_offsets[sk]);
    }
    Eigen::SparseMatrix<double> Op(rows, N * n);
    Op.setFromTriplets(entries.begin(), entries.end());
    Op.makeCompressed();
    Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr(Op);
    return qr.solve(rhs);
}

} // namespace blocktri::support
