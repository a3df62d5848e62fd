#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "slot_model.hpp"

namespace gdlm {

/// Log-evidence of one slot as a function of (alpha, gamma, pi).
///
/// Rows of X_{t+1} are independent m-variate Gaussians with mean row
/// [H(pi) X_t]_{i,:} and shared covariance 1/alpha I + 1/gamma X_t^T X_t.
/// In the eigenbasis Q of X_t^T X_t the covariance is diagonal with entries
/// s_j = 1/alpha + D_j/gamma, so with E = A - sum_k pi_k B_k,
///   F = -(N m / 2) ln 2pi - (N/2) sum_j ln s_j - 1/2 sum_j ||E_j||^2 / s_j.
///
/// ||E_j||^2 and <E_j, B_kj> are quadratics in pi whose coefficients are
/// compressed once at construction, making every evaluation O(K^2 m)
/// regardless of N.
class EvidenceObjective {
  public:
    EvidenceObjective(const SlotGram& gram, const DiffusionGrid& grid)
        : N_(gram.N()), m_(gram.n_days), K_(grid.K()), D_(gram.D) {
        if (static_cast<int>(gram.B.size()) != K_)
            throw ValidationError("slot Gram was built against a different grid");
        aa_ = gram.A.colwise().squaredNorm();
        ab_.resize(K_, m_);
        for (int k = 0; k < K_; ++k)
            ab_.row(k) = (gram.A.array() * gram.B[k].array()).colwise().sum();
        bb_.reserve(K_);
        for (int k = 0; k < K_; ++k) {
            Eigen::MatrixXd bk(K_, m_);
            for (int l = 0; l < K_; ++l)
                bk.row(l) = (gram.B[k].array() * gram.B[l].array()).colwise().sum();
            bb_.push_back(std::move(bk));
        }
    }

    int K() const { return K_; }
    int dim() const { return 2 + (K_ - 1); }  // ln alpha, ln gamma, pinned logits

    /// Residual energies r_j = ||E col j||^2 for the given mixture.
    Eigen::VectorXd residuals(const Eigen::VectorXd& pi) const {
        Eigen::VectorXd r = aa_;
        r.noalias() -= 2.0 * ab_.transpose() * pi;
        for (int k = 0; k < K_; ++k) r.noalias() += pi(k) * (bb_[k].transpose() * pi);
        return r.cwiseMax(0.0);
    }

    double value(const SlotHyperParams& hyper) const {
        hyper.validate(K_);
        Eigen::VectorXd s = (1.0 / hyper.alpha + D_.array() / hyper.gamma).matrix();
        Eigen::VectorXd r = residuals(hyper.pi);
        double f = -0.5 * N_ * m_ * std::log(2.0 * M_PI);
        f -= 0.5 * N_ * s.array().log().sum();
        f -= 0.5 * (r.array() / s.array()).sum();
        return f;
    }

    /// Objective and gradient in packed coordinates (ln alpha, ln gamma,
    /// softmax logits of pi with the first logit pinned to 0). Non-finite
    /// evaluations return -inf with a zero gradient instead of throwing,
    /// so the optimizer can reject the point.
    double value_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
        grad.setZero(dim());
        SlotHyperParams h = unpack(x);
        if (!std::isfinite(h.alpha) || !std::isfinite(h.gamma))
            return -std::numeric_limits<double>::infinity();

        Eigen::VectorXd s = (1.0 / h.alpha + D_.array() / h.gamma).matrix();
        Eigen::VectorXd r = residuals(h.pi);
        double f = -0.5 * N_ * m_ * std::log(2.0 * M_PI);
        f -= 0.5 * N_ * s.array().log().sum();
        f -= 0.5 * (r.array() / s.array()).sum();
        if (!std::isfinite(f)) return -std::numeric_limits<double>::infinity();

        // dF/ds_j = -N/(2 s_j) + r_j/(2 s_j^2), chained through s_j.
        Eigen::ArrayXd t1 = -0.5 * N_ / s.array() + 0.5 * r.array() / (s.array() * s.array());
        grad(0) = (t1 * (-1.0 / h.alpha)).sum();
        grad(1) = (t1 * (-D_.array() / h.gamma)).sum();

        if (K_ > 1) {
            // dF/dpi_k = sum_j <E_j, B_kj> / s_j with
            // <E_j, B_kj> = ab(k,j) - sum_l pi_l bb[k](l,j).
            Eigen::VectorXd gpi(K_);
            for (int k = 0; k < K_; ++k) {
                Eigen::VectorXd eb = ab_.row(k).transpose() - bb_[k].transpose() * h.pi;
                gpi(k) = (eb.array() / s.array()).sum();
            }
            double mean = h.pi.dot(gpi);
            for (int k = 1; k < K_; ++k) grad(2 + k - 1) = h.pi(k) * (gpi(k) - mean);
        }
        return f;
    }

    Eigen::VectorXd pack(const SlotHyperParams& h) const {
        Eigen::VectorXd x(dim());
        x(0) = std::log(h.alpha);
        x(1) = std::log(h.gamma);
        for (int k = 1; k < K_; ++k)
            x(2 + k - 1) = std::log(std::max(h.pi(k), 1e-300)) - std::log(std::max(h.pi(0), 1e-300));
        return x;
    }

    SlotHyperParams unpack(const Eigen::VectorXd& x) const {
        SlotHyperParams h;
        h.alpha = std::exp(x(0));
        h.gamma = std::exp(x(1));
        h.pi.resize(K_);
        double mx = 0.0;  // pinned logit
        for (int k = 1; k < K_; ++k) mx = std::max(mx, x(2 + k - 1));
        double z = std::exp(0.0 - mx);
        h.pi(0) = z;
        for (int k = 1; k < K_; ++k) {
            h.pi(k) = std::exp(x(2 + k - 1) - mx);
            z += h.pi(k);
        }
        h.pi /= z;
        return h;
    }

  private:
    int N_, m_, K_;
    Eigen::VectorXd D_;
    Eigen::VectorXd aa_;                 // ||A col j||^2
    Eigen::MatrixXd ab_;                 // (k,j) -> <A_j, B_kj>
    std::vector<Eigen::MatrixXd> bb_;    // bb_[k](l,j) = <B_kj, B_lj>
};

/// Validated evaluation for external callers: throws on non-finite results.
inline double log_evidence(const EvidenceObjective& obj, const SlotHyperParams& hyper) {
    double f = obj.value(hyper);
    if (!std::isfinite(f)) {
        std::ostringstream msg;
        msg << "log-evidence overflow at alpha=" << hyper.alpha << " gamma=" << hyper.gamma;
        throw NumericError(msg.str());
    }
    return f;
}

/// Analytic gradient in packed coordinates; same domain check as log_evidence.
inline Eigen::VectorXd log_evidence_grad(const EvidenceObjective& obj,
                                         const SlotHyperParams& hyper) {
    hyper.validate(obj.K());
    Eigen::VectorXd grad;
    double f = obj.value_grad(obj.pack(hyper), grad);
    if (!std::isfinite(f)) {
        std::ostringstream msg;
        msg << "log-evidence overflow at alpha=" << hyper.alpha << " gamma=" << hyper.gamma;
        throw NumericError(msg.str());
    }
    return grad;
}

} // namespace gdlm
