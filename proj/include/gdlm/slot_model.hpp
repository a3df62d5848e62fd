#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "diffusion.hpp"
#include "errors.hpp"

namespace gdlm {

struct SlotHyperParams {
    double alpha = 1.0;  // data precision
    double gamma = 1.0;  // prior precision
    Eigen::VectorXd pi;  // K-simplex mixture weights

    void validate(int K) const {
        if (!(alpha > 0.0) || !(gamma > 0.0))
            throw ValidationError("alpha and gamma must be positive");
        check_simplex(pi, K);
    }
};

/// Cached spectral quantities of one slot's data pair (X_t, X_{t+1}).
/// Built once, then shared by the MAP estimator and every evidence evaluation.
struct SlotGram {
    int t = 0;
    int n_days = 0;                  // columns of X_t
    Eigen::MatrixXd U;               // eigenvectors of X_t X_t^T (N x N)
    Eigen::VectorXd lambda;          // its eigenvalues, ascending, clamped at 0
    Eigen::MatrixXd C;               // X_{t+1} X_t^T
    Eigen::MatrixXd Q;               // eigenvectors of X_t^T X_t (m x m)
    Eigen::VectorXd D;               // its eigenvalues, clamped at 0
    Eigen::MatrixXd A;               // X_{t+1} Q
    std::vector<Eigen::MatrixXd> B;  // B_k = (H(tau_k) X_t) Q
    int rank = 0;
    bool rank_deficient = false;
    double persistence_mse = 0.0;    // mean squared entry of X_{t+1} - X_t

    int N() const { return static_cast<int>(U.rows()); }
};

inline constexpr double kRankTol = 1e-10;  // relative eigenvalue cutoff

inline SlotGram build_slot_gram(int t, const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& Xt1,
                                const DiffusionGrid& grid) {
    if (Xt.rows() != Xt1.rows() || Xt.cols() != Xt1.cols())
        throw ValidationError("slot data pair must have matching shapes");
    if (Xt.rows() != grid.kernels[0].rows())
        throw ValidationError("slot data and diffusion grid disagree on sensor count");

    SlotGram g;
    g.t = t;
    g.n_days = static_cast<int>(Xt.cols());
    const int N = static_cast<int>(Xt.rows());

    Eigen::MatrixXd S = Xt * Xt.transpose();
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esN(S);
    if (esN.info() != Eigen::Success) throw NumericError("slot Gram eigendecomposition failed");
    g.U = esN.eigenvectors();
    g.lambda = esN.eigenvalues().cwiseMax(0.0);

    g.C = Xt1 * Xt.transpose();

    Eigen::MatrixXd G = Xt.transpose() * Xt;
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(G);
    if (esM.info() != Eigen::Success) throw NumericError("slot Gram eigendecomposition failed");
    g.Q = esM.eigenvectors();
    g.D = esM.eigenvalues().cwiseMax(0.0);

    g.A = Xt1 * g.Q;
    g.B.reserve(grid.K());
    for (int k = 0; k < grid.K(); ++k) g.B.push_back(grid.kernels[k] * Xt * g.Q);

    double lmax = g.lambda(N - 1);
    double cut = kRankTol * lmax;
    g.rank = 0;
    for (int i = 0; i < N; ++i)
        if (g.lambda(i) > cut) ++g.rank;
    g.rank_deficient = g.rank < N;

    g.persistence_mse = (Xt1 - Xt).squaredNorm() / (static_cast<double>(N) * g.n_days);
    return g;
}

/// Maximum-likelihood transition: the minimum-norm least-squares solution
/// C U pinv(Lambda) U^T, which tolerates rank deficiency.
inline Eigen::MatrixXd ml_transition(const SlotGram& g) {
    const int N = g.N();
    double cut = kRankTol * g.lambda(N - 1);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < N; ++i)
        if (g.lambda(i) > cut) inv(i) = 1.0 / g.lambda(i);
    return g.C * g.U * inv.asDiagonal() * g.U.transpose();
}

inline Eigen::MatrixXd prior_transition(const DiffusionGrid& grid, const Eigen::VectorXd& pi) {
    return mix_kernels(grid, pi);
}

struct SlotModel {
    int t = 0;
    Eigen::MatrixXd H_hat;
    SlotHyperParams hyper;
    double c_data = 0.0;
    double c_prior = 0.0;
    double log_evidence = std::numeric_limits<double>::quiet_NaN();
};

/// MAP transition fusing data and diffusion prior:
///   H = C U diag(a/(a l_i + g)) U^T + H_prior U diag(g/(a l_i + g)) U^T
/// with contribution weights taken from the Frobenius norms of the two
/// shrinkage factors. Never inverts X_t X_t^T.
inline SlotModel map_transition(const SlotGram& gram, const DiffusionGrid& grid,
                                const SlotHyperParams& hyper) {
    hyper.validate(grid.K());
    const double a = hyper.alpha, g = hyper.gamma;

    Eigen::VectorXd denom = (a * gram.lambda.array() + g).matrix();
    Eigen::VectorXd f_data = (a * gram.lambda.array() / denom.array()).matrix();
    Eigen::VectorXd f_prior = (g / denom.array()).matrix();

    Eigen::MatrixXd Hp = prior_transition(grid, hyper.pi);
    Eigen::MatrixXd M = gram.C * gram.U * (a / denom.array()).matrix().asDiagonal() * gram.U.transpose();
    M.noalias() += Hp * gram.U * f_prior.asDiagonal() * gram.U.transpose();

    SlotModel out;
    out.t = gram.t;
    out.H_hat = std::move(M);
    out.hyper = hyper;
    double w_data = f_data.norm();
    double w_prior = f_prior.norm();
    out.c_data = w_data / (w_data + w_prior);
    out.c_prior = w_prior / (w_data + w_prior);
    return out;
}

} // namespace gdlm
