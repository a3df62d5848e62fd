#include <gtest/gtest.h>

#include <cmath>

#include <gdlm/sensor_graph.hpp>

#include "test_support.hpp"

using namespace gdlm;

namespace {

Eigen::MatrixXd path3_unit_distances() {
    Eigen::MatrixXd d(3, 3);
    d << 0, 1, 2,
         1, 0, 1,
         2, 1, 0;
    return d;
}

}  // namespace

TEST(BuildGraph, TwoNodeClosedForm) {
    Eigen::MatrixXd d(2, 2);
    d << 0, 3.0,
         3.0, 0;
    GraphConfig cfg;
    cfg.sigma = 3.0;  // dist == sigma so the weight is e^{-1}
    cfg.kappa = 4.0;
    auto g = build_graph(d, cfg);
    const double w = std::exp(-1.0);
    EXPECT_NEAR(g.W(0, 1), w, 1e-15);
    EXPECT_NEAR(g.W(1, 0), w, 1e-15);
    EXPECT_DOUBLE_EQ(g.W(0, 0), 0.0);
    EXPECT_NEAR(g.eigvals(0), 0.0, 1e-12);
    EXPECT_NEAR(g.eigvals(1), 2.0 * w, 1e-12);
}

TEST(BuildGraph, AllDistancesBeyondKappaIsDisconnected) {
    Eigen::MatrixXd d(3, 3);
    d << 0, 10, 10,
         10, 0, 10,
         10, 10, 0;
    GraphConfig cfg;
    cfg.kappa = 5.0;
    cfg.sigma = 1.0;
    try {
        build_graph(d, cfg);
        FAIL() << "expected disconnected-graph error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("disconnected graph"), std::string::npos);
    }
}

TEST(BuildGraph, ThreeNodePathEigenvalues) {
    GraphConfig cfg;
    cfg.sigma = 1.0;
    cfg.kappa = 1.5;
    auto g = build_graph(path3_unit_distances(), cfg);
    const double w = std::exp(-1.0);
    // Path Laplacian with edge weight w has spectrum {0, w, 3w}.
    EXPECT_NEAR(g.eigvals(0), 0.0, 1e-12);
    EXPECT_NEAR(g.eigvals(1), w, 1e-12);
    EXPECT_NEAR(g.eigvals(2), 3.0 * w, 1e-12);

    // Independent check: raw eigensolve of the explicitly assembled Laplacian.
    Eigen::MatrixXd L(3, 3);
    L << w, -w, 0,
         -w, 2 * w, -w,
         0, -w, w;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(g.eigvals(i), std::max(es.eigenvalues()(i), 0.0), 1e-12);
}

TEST(BuildGraph, LaplacianInvariants) {
    auto rng0 = testsup::rng(42);
    auto dist = testsup::random_geometric_distances(rng0, 12);
    auto g = build_graph(dist, GraphConfig{});
    EXPECT_LT((g.W - g.W.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_DOUBLE_EQ(g.W.diagonal().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LT((g.L * Eigen::VectorXd::Ones(12)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GE(g.eigvals.minCoeff(), 0.0);
    EXPECT_NEAR(g.eigvals(0), 0.0, 1e-10);
    EXPECT_GT(g.eigvals(1), 1e-10);
    // PSD: random quadratic forms are nonnegative.
    auto rng = testsup::rng(43);
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x = testsup::random_vector(rng, 12);
        EXPECT_GE(x.dot(g.L * x), -1e-10);
    }
    // Orthonormal eigenvectors reconstruct L.
    EXPECT_LT((g.eigvecs * g.eigvecs.transpose() - Eigen::MatrixXd::Identity(12, 12)).norm(), 1e-8);
}

TEST(BuildGraph, AutoSigmaIsStdOfEdgeDistances) {
    Eigen::MatrixXd d(3, 3);
    d << 0, 1, 3,
         1, 0, 2,
         3, 2, 0;
    GraphConfig cfg;
    cfg.kappa = 10.0;  // all three pairs form edges
    auto g = build_graph(d, cfg);
    const double mean = (1.0 + 2.0 + 3.0) / 3.0;
    const double var = (1.0 + 4.0 + 9.0) / 3.0 - mean * mean;
    EXPECT_NEAR(g.sigma, std::sqrt(var), 1e-12);
    EXPECT_NEAR(g.W(0, 1), std::exp(-1.0 / var), 1e-12);
}

TEST(BuildGraph, AutoSigmaEquidistantFallback) {
    Eigen::MatrixXd d(3, 3);
    d << 0, 2, 2,
         2, 0, 2,
         2, 2, 0;
    GraphConfig cfg;
    cfg.kappa = 3.0;
    auto g = build_graph(d, cfg);
    EXPECT_DOUBLE_EQ(g.sigma, 2.0);  // zero variance falls back to the mean
}

TEST(AutoKappa, DoublesSmallestConnectingDistance) {
    // Path distances 1,1,2: threshold 1 already connects, so kappa = 2.
    EXPECT_DOUBLE_EQ(auto_kappa(path3_unit_distances()), 2.0);

    Eigen::MatrixXd d(4, 4);
    const double inf = std::numeric_limits<double>::infinity();
    d << 0, 1, 5, inf,
         1, 0, 1, 5,
         5, 1, 0, 3,
         inf, 5, 3, 0;
    // Thresholds 1 leaves node 3 isolated; 3 connects everything.
    EXPECT_DOUBLE_EQ(auto_kappa(d), 6.0);
}

TEST(AutoKappa, ThrowsWhenNothingConnects) {
    Eigen::MatrixXd d(3, 3);
    const double inf = std::numeric_limits<double>::infinity();
    d << 0, 1, inf,
         1, 0, inf,
         inf, inf, 0;
    EXPECT_THROW(auto_kappa(d), ConfigError);
}

TEST(BuildGraph, InputValidation) {
    Eigen::MatrixXd ok = path3_unit_distances();
    Eigen::MatrixXd asym = ok;
    asym(0, 1) = 1.5;
    EXPECT_THROW(build_graph(asym, GraphConfig{}), ConfigError);
    Eigen::MatrixXd diag = ok;
    diag(1, 1) = 0.1;
    EXPECT_THROW(build_graph(diag, GraphConfig{}), ConfigError);
    GraphConfig bad_eps;
    bad_eps.epsilon = 1.5;
    EXPECT_THROW(build_graph(ok, bad_eps), ConfigError);
    EXPECT_THROW(build_graph(Eigen::MatrixXd::Zero(1, 1), GraphConfig{}), ConfigError);
}
