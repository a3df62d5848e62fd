#include <gtest/gtest.h>

#include <cmath>

#include <gdlm/lbfgs.hpp>

using namespace gdlm;

namespace {

// Concave quadratic f(x) = -0.5 (x-c)' A (x-c) with known maximizer c.
struct Quadratic {
    Eigen::MatrixXd A;
    Eigen::VectorXd c;
    double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
        Eigen::VectorXd d = x - c;
        Eigen::VectorXd Ad = A * d;
        g = -Ad;
        return -0.5 * d.dot(Ad);
    }
};

}  // namespace

TEST(Lbfgs, MaximizesQuadratic) {
    const int n = 6;
    Eigen::MatrixXd R = Eigen::MatrixXd::Random(n, n);
    Quadratic q{R * R.transpose() + Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::LinSpaced(n, -2.0, 3.0)};
    LbfgsOptions opts;
    opts.grad_tol = 1e-9;
    auto res = lbfgs_maximize(q, Eigen::VectorXd::Zero(n), opts);
    EXPECT_TRUE(res.converged);
    EXPECT_LT((res.x - q.c).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_NEAR(res.fx, 0.0, 1e-10);
}

TEST(Lbfgs, MaximizesRosenbrockNegative) {
    // max of -Rosenbrock is at (1, 1) with value 0.
    auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        double a = 1.0 - x(0);
        double b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = 2.0 * a + 400.0 * x(0) * b;
        g(1) = -200.0 * b;
        return -(a * a + 100.0 * b * b);
    };
    LbfgsOptions opts;
    opts.max_iters = 500;
    opts.grad_tol = 1e-8;
    auto res = lbfgs_maximize(fg, Eigen::VectorXd::Constant(2, -1.5), opts);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.x(0), 1.0, 1e-5);
    EXPECT_NEAR(res.x(1), 1.0, 1e-5);
}

TEST(Lbfgs, TraceIsMonotoneNondecreasing) {
    auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = -2.0 * x.array().cube().matrix() - x;
        return -0.5 * x.squaredNorm() - 0.5 * (x.array().square().square().sum());
    };
    auto res = lbfgs_maximize(fg, Eigen::VectorXd::Constant(4, 2.0), LbfgsOptions{});
    ASSERT_FALSE(res.trace.empty());
    for (size_t i = 1; i < res.trace.size(); ++i) {
        EXPECT_GE(res.trace[i], res.trace[i - 1] - 1e-12);
    }
}

TEST(Lbfgs, RespectsBox) {
    // Maximizer of f(x) = x lies outside the box; iterates must stay clamped.
    auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = Eigen::VectorXd::Ones(x.size());
        return x.sum();
    };
    LbfgsOptions opts;
    opts.box_lo = -1.0;
    opts.box_hi = 1.0;
    opts.max_iters = 50;
    auto res = lbfgs_maximize(fg, Eigen::VectorXd::Zero(3), opts);
    EXPECT_LE(res.x.maxCoeff(), 1.0 + 1e-12);
    EXPECT_NEAR(res.fx, 3.0, 1e-9);
}

TEST(Lbfgs, SurvivesNonFiniteRegions) {
    // f = log(4 - ||x||^2) is -inf outside the disk; optimizer must not accept those trials.
    auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        double r = 4.0 - x.squaredNorm();
        if (r <= 0.0) {
            g = Eigen::VectorXd::Zero(x.size());
            return -std::numeric_limits<double>::infinity();
        }
        g = 2.0 * x / r * -1.0;
        return std::log(r);
    };
    auto res = lbfgs_maximize(fg, Eigen::VectorXd::Constant(2, 1.2), LbfgsOptions{});
    EXPECT_TRUE(std::isfinite(res.fx));
    EXPECT_NEAR(res.fx, std::log(4.0), 1e-6);
    EXPECT_LT(res.x.norm(), 1e-3);
}
