#include "blocktri/kalman.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "blocktri/dense_kernels.hpp"

namespace blocktri::kalman {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidDimensions(what);
}

Eigen::MatrixXd cholesky_of(const Eigen::MatrixXd& cov, Index step) {
    Eigen::MatrixXd L = cov;
    try {
        chol_factor(L);
    } catch (const NotPositiveDefinite& e) {
        throw e.at_block(step);
    }
    return L;
}

} // namespace

void StateSpaceModel::validate() const {
    const auto N = static_cast<std::size_t>(horizon);
    require(horizon >= 1 && state_dim >= 1 && obs_dim >= 1, "model needs N, n, m >= 1");
    require(transition.size() == N && observation.size() == N && process_cov.size() == N &&
                measurement_cov.size() == N && measurements.size() == N && prior_offsets.size() == N,
            "model sequences must all have N entries");
    const Index n = state_dim, m = obs_dim;
    for (std::size_t k = 0; k < N; ++k) {
        const std::string at = " at step " + std::to_string(k);
        require(transition[k].rows() == n && transition[k].cols() == n, "G must be n x n" + at);
        require(observation[k].rows() == m && observation[k].cols() == n, "H must be m x n" + at);
        require(process_cov[k].rows() == n && process_cov[k].cols() == n, "Q must be n x n" + at);
        require(measurement_cov[k].rows() == m && measurement_cov[k].cols() == m, "R must be m x m" + at);
        require(measurements[k].size() == m, "z must have m entries" + at);
        require(prior_offsets[k].size() == n, "zeta must have n entries" + at);
    }
    require(transition[0].isIdentity(0.0), "G_1 must be the identity");
}

NormalEquations build_normal_equations(const StateSpaceModel& model) {
    model.validate();
    const Index N = model.horizon;
    const Index n = model.state_dim;
    const auto at = [](Index k) { return static_cast<std::size_t>(k); };

    std::vector<Eigen::MatrixXd> LQ, LR;
    LQ.reserve(at(N));
    LR.reserve(at(N));
    for (Index k = 0; k < N; ++k) {
        LQ.push_back(cholesky_of(model.process_cov[at(k)], k));
        LR.push_back(cholesky_of(model.measurement_cov[at(k)], k));
    }

    NormalEquations eq{BlockTridiagonalMatrix<double>(N, n), BlockRhs<double>(N, n, 1)};
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (Index k = 0; k < N; ++k) {
        // Whitened operators: Q^{-1} = W^T W with W = L_Q^{-1}, R^{-1} H = V^T V.
        Eigen::MatrixXd W = I;
        trsm_lower(LQ[at(k)], W, TriangularSolve::Forward);
        Eigen::MatrixXd V = model.observation[at(k)];
        trsm_lower(LR[at(k)], V, TriangularSolve::Forward);
        Eigen::VectorXd zw = model.measurements[at(k)];
        trsm_lower(LR[at(k)], zw, TriangularSolve::Forward);
        Eigen::VectorXd zeta = model.prior_offsets[at(k)];
        trsm_lower(LQ[at(k)], zeta, TriangularSolve::Forward);
        trsm_lower(LQ[at(k)], zeta, TriangularSolve::Backward);

        Eigen::MatrixXd Akk = W.transpose() * W;
        Akk.noalias() += V.transpose() * V;
        Eigen::VectorXd bk = V.transpose() * zw + zeta;

        if (k + 1 < N) {
            const Eigen::MatrixXd& G = model.transition[at(k + 1)];
            Eigen::MatrixXd U = G;
            trsm_lower(LQ[at(k + 1)], U, TriangularSolve::Forward);
            Akk.noalias() += U.transpose() * U;
            trsm_lower(LQ[at(k + 1)], U, TriangularSolve::Backward);
            eq.matrix.sub(k) = -U;
            Eigen::VectorXd next = model.prior_offsets[at(k + 1)];
            trsm_lower(LQ[at(k + 1)], next, TriangularSolve::Forward);
            trsm_lower(LQ[at(k + 1)], next, TriangularSolve::Backward);
            bk.noalias() -= G.transpose() * next;
        }
        eq.matrix.diag(k) = Akk;
        eq.rhs[k] = bk;
    }
    eq.matrix.symmetrize();
    return eq;
}

StateSpaceModel generate_rotation_model(Index state_dim, Index obs_dim, Index horizon, double dt,
                                        std::uint64_t seed) {
    require(state_dim >= 2 && state_dim % 2 == 0, "state dimension must be even and >= 2");
    require(obs_dim >= state_dim, "observation dimension must be >= state dimension");
    require(horizon >= 1, "horizon must be >= 1");
    require(dt > 0, "dt must be positive");
    const Index n = state_dim, m = obs_dim;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi / 4);
    std::uniform_real_distribution<double> noise_var(0.1, 1.0);
    const auto gaussian = [&](Index rows, Index cols) {
        Eigen::MatrixXd M(rows, cols);
        for (Index c = 0; c < cols; ++c)
            for (Index r = 0; r < rows; ++r) M(r, c) = normal(rng);
        return M;
    };

    constexpr double damping = 0.98;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (Index p = 0; p < n / 2; ++p) {
        double theta = angle(rng);
        while (theta <= 0.0) theta = angle(rng);
        const double c = damping * std::cos(theta), s = damping * std::sin(theta);
        G.block(2 * p, 2 * p, 2, 2) << c, -s, s, c;
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(gaussian(m, n), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sigma = svd.singularValues().cwiseMax(0.5).cwiseMin(2.0);
    const Eigen::MatrixXd H = svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();

    const Eigen::MatrixXd M = gaussian(n, n);
    Eigen::MatrixXd Q = 0.01 * (M * M.transpose() + double(n) * Eigen::MatrixXd::Identity(n, n)) / double(n);
    Q = (0.5 * (Q + Q.transpose())).eval();

    Eigen::VectorXd r_diag(m);
    for (Index i = 0; i < m; ++i) r_diag(i) = noise_var(rng);
    const Eigen::MatrixXd R = r_diag.asDiagonal();

    StateSpaceModel model;
    model.horizon = horizon;
    model.state_dim = n;
    model.obs_dim = m;
    model.dt = dt;
    model.seed = seed;
    const Eigen::MatrixXd LQ = cholesky_of(Q, 0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Index k = 0; k < horizon; ++k) {
        const Eigen::MatrixXd& Gk = k == 0 ? Eigen::MatrixXd::Identity(n, n).eval() : G;
        model.transition.push_back(Gk);
        model.observation.push_back(H);
        model.process_cov.push_back(Q);
        model.measurement_cov.push_back(R);
        model.prior_offsets.push_back(Eigen::VectorXd::Zero(n));
        x = (Gk * x + LQ * gaussian(n, 1).col(0)).eval();
        model.measurements.push_back(H * x + r_diag.cwiseSqrt().cwiseProduct(gaussian(m, 1).col(0)));
    }
    return model;
}

} // namespace blocktri::kalman
