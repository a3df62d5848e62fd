#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace gdlm {

struct LbfgsOptions {
    int max_iters = 200;
    double grad_tol = 1e-6;  // inf-norm of the gradient at an accepted iterate
    int history = 8;
    // Coordinate box. The evidence objective works in log/logit coordinates,
    // so +-40 (~e^40 = 2.4e17) only trips on degenerate data whose evidence
    // is unbounded; everywhere else the optimum is interior.
    double box_lo = -40.0;
    double box_hi = 40.0;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double fx = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // objective at x0 and at each accepted iterate
};

/// Maximizes a smooth objective with L-BFGS and a strong-Wolfe line search.
/// `fg(x, grad)` returns the objective and fills its gradient; non-finite
/// values are treated as rejected trial points. Iterates are kept inside the
/// coordinate box; accepted objective values never decrease.
template <class FG>
LbfgsResult lbfgs_maximize(FG&& fg, Eigen::VectorXd x0, const LbfgsOptions& opts = {}) {
    using Eigen::VectorXd;
    const double inf = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(x0.size());

    auto clamp_box = [&](VectorXd v) {
        return v.cwiseMax(opts.box_lo).cwiseMin(opts.box_hi).eval();
    };

    // Internally minimize f = -objective.
    auto eval = [&](const VectorXd& x, VectorXd& grad) -> double {
        double v = fg(x, grad);
        if (!std::isfinite(v)) {
            grad.setZero();
            return inf;
        }
        grad = -grad;
        return -v;
    };

    LbfgsResult res;
    res.x = clamp_box(std::move(x0));
    VectorXd g(n);
    double f = eval(res.x, g);
    if (!std::isfinite(f)) {
        // Unusable start: report it as-is, the caller keeps its init.
        res.fx = -inf;
        res.trace.push_back(-inf);
        return res;
    }
    res.fx = -f;
    res.trace.push_back(res.fx);

    std::deque<VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    VectorXd x_new(n), g_new(n);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            res.converged = true;
            break;
        }

        // Two-loop recursion for the search direction.
        VectorXd d = -g;
        std::vector<double> alpha_coef(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha_coef[i] = rho_hist[i] * s_hist[i].dot(d);
            d -= alpha_coef[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const VectorXd& s = s_hist.back();
            const VectorXd& y = y_hist.back();
            d *= s.dot(y) / y.squaredNorm();
        }
        for (size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * y_hist[i].dot(d);
            d += (alpha_coef[i] - beta) * s_hist[i];
        }
        double dg = g.dot(d);
        if (!(dg < 0.0)) {  // not a descent direction: fall back to steepest
            d = -g;
            dg = -g.squaredNorm();
        }

        // Strong Wolfe line search (bracket + zoom, Nocedal & Wright 3.5/3.6).
        const double c1 = 1e-4, c2 = 0.9;
        const double f0 = f, dg0 = dg;
        double step = 1.0, step_prev = 0.0;
        double f_prev = f0;
        const double step_max = 1e8;
        double step_acc = -1.0, f_acc = inf;
        VectorXd x_acc, g_acc;

        auto probe = [&](double a, double& fv, VectorXd& xv, VectorXd& gv) -> double {
            xv = clamp_box(res.x + a * d);
            fv = eval(xv, gv);
            return gv.dot(d);
        };

        auto zoom = [&](double lo, double f_lo, double hi) {
            for (int z = 0; z < 30; ++z) {
                double a = 0.5 * (lo + hi);
                double fv;
                double dgv = probe(a, fv, x_new, g_new);
                if (!std::isfinite(fv) || fv > f0 + c1 * a * dg0 || fv >= f_lo) {
                    hi = a;
                } else {
                    if (std::abs(dgv) <= -c2 * dg0) {
                        step_acc = a; f_acc = fv; x_acc = x_new; g_acc = g_new;
                        return;
                    }
                    if (dgv * (hi - lo) >= 0.0) hi = lo;
                    lo = a; f_lo = fv;
                    step_acc = a; f_acc = fv; x_acc = x_new; g_acc = g_new;
                }
            }
        };

        for (int ls = 0; ls < 20; ++ls) {
            double fv;
            double dgv = probe(step, fv, x_new, g_new);
            if (!std::isfinite(fv) || fv > f0 + c1 * step * dg0 || (ls > 0 && fv >= f_prev)) {
                zoom(step_prev, f_prev, step);
                break;
            }
            if (std::abs(dgv) <= -c2 * dg0) {
                step_acc = step; f_acc = fv; x_acc = x_new; g_acc = g_new;
                break;
            }
            // Remember the best sufficient-decrease point seen so far.
            step_acc = step; f_acc = fv; x_acc = x_new; g_acc = g_new;
            if (dgv >= 0.0) {
                zoom(step, fv, step_prev);
                break;
            }
            step_prev = step; f_prev = fv;
            step = std::min(2.0 * step, step_max);
        }

        if (!(f_acc < f0) || step_acc <= 0.0) break;  // no usable step: keep best iterate

        VectorXd s = x_acc - res.x;
        VectorXd y = g_acc - g;
        res.x = x_acc;
        f = f_acc;
        g = g_acc;
        res.fx = -f;
        res.trace.push_back(res.fx);
        res.iterations = iter + 1;

        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        if (s_hist.empty() && res.x.cwiseAbs().maxCoeff() >= opts.box_hi) {
            // Pinned to the box wall with no curvature: nothing more to do.
        }
    }
    if (!res.converged && g.lpNorm<Eigen::Infinity>() < opts.grad_tol) res.converged = true;
    return res;
}

} // namespace gdlm
