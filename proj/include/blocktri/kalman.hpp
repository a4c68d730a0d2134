#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "blocktri/core.hpp"

namespace blocktri::kalman {

/// Linear-Gaussian state-space model over a horizon of N steps:
///   x_k = G_k x_{k-1} + w_k,  w_k ~ N(0, Q_k)
///   z_k = H_k x_k + v_k,      v_k ~ N(0, R_k)
/// with G_1 = I. `zeta` holds the prior-mean offsets of the process terms,
/// i.e. the process residual at step k is x_k - G_k x_{k-1} - zeta_k.
struct StateSpaceModel {
    Index horizon = 0;
    Index state_dim = 0;
    Index obs_dim = 0;
    double dt = 0.1;
    std::uint64_t seed = 0;

    std::vector<Eigen::MatrixXd> transition;      // G_k, n x n
    std::vector<Eigen::MatrixXd> observation;     // H_k, m x n
    std::vector<Eigen::MatrixXd> process_cov;     // Q_k, n x n
    std::vector<Eigen::MatrixXd> measurement_cov; // R_k, m x m
    std::vector<Eigen::VectorXd> measurements;    // z_k
    std::vector<Eigen::VectorXd> prior_offsets;   // zeta_k

    /// Throws InvalidDimensions on inconsistent sizes or G_1 != I.
    void validate() const;
};

struct NormalEquations {
    BlockTridiagonalMatrix<double> matrix;
    BlockRhs<double> rhs;
};

/// MAP-smoothing normal equations (H^T R^{-1} H + G^T Q^{-1} G) x = H^T R^{-1} z + G^T Q^{-1} zeta:
///   A(k,k)   = Q_k^{-1} + G_{k+1}^T Q_{k+1}^{-1} G_{k+1} + H_k^T R_k^{-1} H_k   (G_{N+1} = 0)
///   A(k+1,k) = -Q_{k+1}^{-1} G_{k+1}
///   b_k      = H_k^T R_k^{-1} z_k + Q_k^{-1} zeta_k - G_{k+1}^T Q_{k+1}^{-1} zeta_{k+1}
/// Covariances are only ever applied through their Cholesky factors.
/// Throws NotPositiveDefinite (block = time index) if a Q_k or R_k is not SPD.
NormalEquations build_normal_equations(const StateSpaceModel& model);

/// Synthetic rotational-dynamics model: G is block diagonal with damped 2x2
/// rotations (damping 0.98, angles uniform in (0, pi/4)), H is m x n with
/// singular values clamped to [0.5, 2], Q = 0.01 (M M^T + n I) / n and R is
/// diagonal with entries uniform in [0.1, 1]. Measurements are simulated
/// from x_0 = 0; zeta = 0. `dt` is recorded but does not change the draws.
StateSpaceModel generate_rotation_model(Index state_dim, Index obs_dim, Index horizon, double dt,
                                        std::uint64_t seed);

} // namespace blocktri::kalman
