#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace gdlm {

namespace detail {

inline void require_transition(const TrainedModel& model, int slot_of_day) {
    if (!model.has_transition(slot_of_day))
        throw ConfigError("horizon exceeds day boundary at slot " + std::to_string(slot_of_day) +
                          " (cross-midnight wrap disabled)");
}

} // namespace detail

/// Normalizes a raw snapshot for propagation; missing values (0 mph) map to
/// the sensor's training mean, i.e. 0 in normalized units.
inline Eigen::VectorXd normalize_input(const TrainedModel& model, const Eigen::VectorXd& x_raw) {
    if (x_raw.size() != model.N())
        throw ValidationError("input vector length " + std::to_string(x_raw.size()) +
                              " does not match model sensor count " + std::to_string(model.N()));
    Eigen::VectorXd z(model.N());
    for (int i = 0; i < model.N(); ++i)
        z(i) = x_raw(i) != 0.0 ? (x_raw(i) - model.norm.mu(i)) / model.norm.sd(i) : 0.0;
    return z;
}

inline Eigen::VectorXd denormalize(const TrainedModel& model, const Eigen::VectorXd& z) {
    return (z.array() * model.norm.sd.array() + model.norm.mu.array()).matrix();
}

/// Propagates a raw snapshot h steps from slot t by successive matrix-vector
/// products; returns the denormalized prediction.
inline Eigen::VectorXd predict(const TrainedModel& model, const Eigen::VectorXd& x_raw, int t,
                               int h) {
    if (h < 1) throw ConfigError("prediction horizon must be at least 1 step");
    if (t < 0 || t >= model.T) throw ConfigError("base slot out of range");
    Eigen::VectorXd z = normalize_input(model, x_raw);
    for (int l = 0; l < h; ++l) {
        int s = (t + l) % model.T;
        detail::require_transition(model, s);
        z = model.slots[s].H_hat * z;
    }
    return denormalize(model, z);
}

/// Predictive covariance after h steps from slot t, in normalized units:
/// R_1 = 1/alpha_t I, then R_l = 1/alpha_s I + H_s R_{l-1} H_s^T.
inline Eigen::MatrixXd predictive_covariance(const TrainedModel& model, int t, int h) {
    if (h < 1) throw ConfigError("prediction horizon must be at least 1 step");
    if (t < 0 || t >= model.T) throw ConfigError("base slot out of range");
    const int N = model.N();
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(N, N);
    for (int l = 0; l < h; ++l) {
        int s = (t + l) % model.T;
        detail::require_transition(model, s);
        const SlotModel& sm = model.slots[s];
        if (l == 0) {
            R = (1.0 / sm.hyper.alpha) * Eigen::MatrixXd::Identity(N, N);
        } else {
            R = (sm.H_hat * R * sm.H_hat.transpose()).eval();
            R.diagonal().array() += 1.0 / sm.hyper.alpha;
        }
    }
    return 0.5 * (R + R.transpose()).eval();
}

/// Persistence baseline: traffic does not change over the horizon.
inline Eigen::VectorXd baseline_predict(const Eigen::VectorXd& x_raw, int /*h*/) { return x_raw; }

struct Forecast {
    int base_slot = 0;
    std::vector<int> horizons;                 // steps
    std::vector<Eigen::VectorXd> means;        // denormalized, mph
    std::vector<Eigen::VectorXd> cov_diag;     // denormalized variances; empty unless requested
};

/// Multi-horizon forecast sharing one propagation pass across horizons.
inline Forecast forecast(const TrainedModel& model, const Eigen::VectorXd& x_raw, int t,
                         const std::vector<int>& horizons, bool with_variance = false) {
    if (horizons.empty()) throw ConfigError("no horizons requested");
    int hmax = 0;
    for (int h : horizons) {
        if (h < 1) throw ConfigError("prediction horizon must be at least 1 step");
        hmax = std::max(hmax, h);
    }
    Forecast out;
    out.base_slot = t;
    out.horizons = horizons;
    out.means.resize(horizons.size());
    if (with_variance) out.cov_diag.resize(horizons.size());

    const int N = model.N();
    Eigen::VectorXd z = normalize_input(model, x_raw);
    Eigen::MatrixXd R;
    if (with_variance) R = Eigen::MatrixXd::Zero(N, N);
    for (int l = 1; l <= hmax; ++l) {
        int s = (t + l - 1) % model.T;
        detail::require_transition(model, s);
        const SlotModel& sm = model.slots[s];
        z = sm.H_hat * z;
        if (with_variance) {
            if (l == 1) {
                R = (1.0 / sm.hyper.alpha) * Eigen::MatrixXd::Identity(N, N);
            } else {
                R = (sm.H_hat * R * sm.H_hat.transpose()).eval();
                R.diagonal().array() += 1.0 / sm.hyper.alpha;
            }
        }
        for (size_t i = 0; i < horizons.size(); ++i) {
            if (horizons[i] == l) {
                out.means[i] = denormalize(model, z);
                if (with_variance)
                    out.cov_diag[i] =
                        (R.diagonal().array() * model.norm.sd.array().square()).matrix();
            }
        }
    }
    return out;
}

} // namespace gdlm
