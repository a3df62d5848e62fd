#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "sensor_graph.hpp"

namespace gdlm {

/// Heat kernels H(tau) = V exp(-tau D) V^T on a log-spaced grid of periods.
struct DiffusionGrid {
    std::vector<double> taus;             // ascending, positive
    std::vector<Eigen::MatrixXd> kernels;  // one per tau

    int K() const { return static_cast<int>(taus.size()); }
};

/// Single heat kernel at diffusion period tau.
inline Eigen::MatrixXd kernel_at(const SensorGraph& g, double tau) {
    Eigen::VectorXd e = (-tau * g.eigvals.array()).exp();
    Eigen::MatrixXd H = g.eigvecs * e.asDiagonal() * g.eigvecs.transpose();
    H = 0.5 * (H + H.transpose()).eval();
    return H;
}

/// Shortest and longest useful diffusion periods. Candidates are 10^s for
/// s in {-10.0, -9.9, ..., 10.0}; tau0 is the largest candidate whose kernel
/// still looks like I (spectral distance < epsilon) and tauInf the smallest
/// whose kernel has mixed to the uniform matrix. Both tests reduce to scalar
/// inequalities in lambda_max and lambda_2:
///   ||H(tau) - I||_2 = 1 - exp(-tau lambda_max)
///   ||H(tau) - (1/N) 11^T||_2 = exp(-tau lambda_2)
inline std::pair<double, double> extreme_taus(const SensorGraph& g, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    const double lmax = g.eigvals(g.size() - 1);
    const double l2 = g.eigvals(1);
    if (l2 <= 1e-10) throw ConfigError("disconnected graph: tauInf undefined");

    double tau0 = -1.0, tauInf = -1.0;
    for (int i = 0; i <= 200; ++i) {
        double s = (i - 100) / 10.0;
        double tau = std::pow(10.0, s);
        if (1.0 - std::exp(-tau * lmax) < epsilon) tau0 = tau;  // ascending scan keeps the largest
        if (tauInf < 0.0 && std::exp(-tau * l2) < epsilon) tauInf = tau;
    }
    if (tau0 < 0.0 || tauInf < 0.0) {
        std::ostringstream msg;
        msg << "no candidate tau satisfies the extreme-kernel conditions"
            << " (lambda_2=" << l2 << ", lambda_max=" << lmax << ", epsilon=" << epsilon << ")";
        throw ConfigError(msg.str());
    }
    return {tau0, tauInf};
}

/// Grid over explicit periods (must be ascending and positive).
inline DiffusionGrid grid_from_taus(const SensorGraph& g, const std::vector<double>& taus) {
    if (taus.empty()) throw ConfigError("diffusion grid needs at least one tau");
    for (size_t k = 0; k < taus.size(); ++k) {
        if (!(taus[k] > 0.0)) throw ConfigError("diffusion periods must be positive");
        if (k > 0 && !(taus[k] > taus[k - 1]))
            throw ConfigError("diffusion periods must be strictly ascending");
    }
    DiffusionGrid grid;
    grid.taus = taus;
    grid.kernels.reserve(taus.size());
    for (double tau : taus) grid.kernels.push_back(kernel_at(g, tau));
    return grid;
}

/// K periods log-spaced from tau0 to tauInf inclusive.
inline DiffusionGrid build_grid(const SensorGraph& g, const GraphConfig& cfg) {
    if (cfg.K < 2) throw ConfigError("diffusion grid needs K >= 2");
    auto [tau0, tauInf] = extreme_taus(g, cfg.epsilon);
    if (!(tau0 < tauInf)) {
        std::ostringstream msg;
        msg << "degenerate diffusion range: tau0=" << tau0 << " >= tauInf=" << tauInf;
        throw ConfigError(msg.str());
    }
    std::vector<double> taus(cfg.K);
    const double s0 = std::log10(tau0), s1 = std::log10(tauInf);
    for (int k = 0; k < cfg.K; ++k) taus[k] = std::pow(10.0, s0 + (s1 - s0) * k / (cfg.K - 1));
    taus.front() = tau0;
    taus.back() = tauInf;
    return grid_from_taus(g, taus);
}

inline void check_simplex(const Eigen::VectorXd& pi, int K) {
    if (static_cast<int>(pi.size()) != K)
        throw ValidationError("mixture weight count does not match grid size");
    if (pi.minCoeff() < -1e-12 || pi.maxCoeff() > 1.0 + 1e-9 ||
        std::abs(pi.sum() - 1.0) > 1e-9)
        throw ValidationError("mixture weights must form a probability simplex");
}

/// Convex mixture H(T) = sum_k pi_k H(tau_k); doubly stochastic like its parts.
inline Eigen::MatrixXd mix_kernels(const DiffusionGrid& grid, const Eigen::VectorXd& pi) {
    check_simplex(pi, grid.K());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(grid.kernels[0].rows(), grid.kernels[0].cols());
    for (int k = 0; k < grid.K(); ++k) H.noalias() += pi(k) * grid.kernels[k];
    return H;
}

} // namespace gdlm
