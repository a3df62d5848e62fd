#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace gdlm {

struct GraphConfig {
    double kappa = -1.0;    // distance threshold; <= 0 selects it automatically
    double sigma = -1.0;    // kernel width; <= 0 derives it from below-threshold distances
    double epsilon = 0.01;  // extreme-kernel tolerance
    int K = 5;              // number of diffusion periods
};

struct SensorGraph {
    Eigen::MatrixXd W;        // symmetric weights, zero diagonal
    Eigen::MatrixXd L;        // Laplacian diag(W1) - W
    Eigen::VectorXd eigvals;  // ascending, clamped at 0
    Eigen::MatrixXd eigvecs;  // orthonormal columns
    double kappa = 0.0;       // effective threshold used
    double sigma = 0.0;       // effective width used

    int size() const { return static_cast<int>(W.rows()); }
};

namespace detail {

class UnionFind {
  public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(int a, int b) { parent_[find(a)] = find(b); }

  private:
    std::vector<int> parent_;
};

inline bool connected_at(const Eigen::MatrixXd& distM, double kappa) {
    const int n = static_cast<int>(distM.rows());
    UnionFind uf(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (distM(i, j) > 0.0 && distM(i, j) <= kappa) uf.unite(i, j);
    int root = uf.find(0);
    for (int i = 1; i < n; ++i)
        if (uf.find(i) != root) return false;
    return true;
}

} // namespace detail

/// Smallest pairwise distance whose threshold graph is connected, doubled.
/// Searched over the sorted distinct finite distances present in the matrix.
inline double auto_kappa(const Eigen::MatrixXd& distM) {
    const int n = static_cast<int>(distM.rows());
    if (n < 2) throw ConfigError("auto kappa needs at least 2 sensors");
    std::vector<double> vals;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (distM(i, j) > 0.0 && std::isfinite(distM(i, j))) vals.push_back(distM(i, j));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    if (vals.empty() || !detail::connected_at(distM, vals.back()))
        throw ConfigError("no distance threshold connects the sensor graph");
    size_t lo = 0, hi = vals.size() - 1;  // invariant: vals[hi] connects
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (detail::connected_at(distM, vals[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return 2.0 * vals[hi];
}

/// Builds the Gaussian-weighted graph, its Laplacian, and the eigendecomposition.
/// W(i,j) = exp(-dist^2/sigma^2) for 0 < dist <= kappa, else 0.
inline SensorGraph build_graph(const Eigen::MatrixXd& distM, const GraphConfig& cfg = {}) {
    const int n = static_cast<int>(distM.rows());
    if (n < 2) throw ConfigError("graph needs at least 2 sensors");
    if (distM.cols() != n) throw ConfigError("distance matrix must be square");
    if ((distM - distM.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + distM.cwiseAbs().maxCoeff()))
        throw ConfigError("distance matrix must be symmetric");
    if (distM.diagonal().cwiseAbs().maxCoeff() != 0.0)
        throw ConfigError("distance matrix must have zero diagonal");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
        throw ConfigError("epsilon must lie in (0,1)");

    SensorGraph g;
    g.kappa = cfg.kappa > 0.0 ? cfg.kappa : auto_kappa(distM);

    if (cfg.sigma > 0.0) {
        g.sigma = cfg.sigma;
    } else {
        // Width defaults to the spread of the distances that form edges.
        double sum = 0.0, sum2 = 0.0;
        long cnt = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double d = distM(i, j);
                if (d > 0.0 && d <= g.kappa) {
                    sum += d;
                    sum2 += d * d;
                    ++cnt;
                }
            }
        if (cnt == 0) throw ConfigError("disconnected graph: no distances below threshold");
        double mean = sum / cnt;
        double var = sum2 / cnt - mean * mean;
        g.sigma = std::sqrt(std::max(var, 0.0));
        if (!(g.sigma > 0.0)) g.sigma = mean > 0.0 ? mean : 1.0;  // all edges equidistant
    }

    g.W = Eigen::MatrixXd::Zero(n, n);
    const double inv_s2 = 1.0 / (g.sigma * g.sigma);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = distM(i, j);
            if (d > 0.0 && d <= g.kappa) {
                double w = std::exp(-d * d * inv_s2);
                g.W(i, j) = w;
                g.W(j, i) = w;
            }
        }

    g.L = Eigen::MatrixXd(g.W.rowwise().sum().asDiagonal());
    g.L -= g.W;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.L);
    if (es.info() != Eigen::Success) throw NumericError("Laplacian eigendecomposition failed");
    g.eigvals = es.eigenvalues().cwiseMax(0.0);
    g.eigvecs = es.eigenvectors();

    if (g.eigvals(1) <= 1e-10) {
        std::ostringstream msg;
        msg << "disconnected graph: Fiedler eigenvalue " << g.eigvals(1)
            << " at threshold kappa=" << g.kappa;
        throw ConfigError(msg.str());
    }
    return g;
}

} // namespace gdlm
