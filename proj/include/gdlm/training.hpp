#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "day_tensor.hpp"
#include "diffusion.hpp"
#include "errors.hpp"
#include "evidence.hpp"
#include "lbfgs.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "slot_model.hpp"

namespace gdlm {

struct OptimizerConfig {
    int max_iters = 200;
    double grad_tol = 1e-6;
    int restarts = 3;
};

struct TrainConfig {
    OptimizerConfig opt;
    bool wrap = true;        // also train the cross-midnight slot
    std::uint64_t seed = 0;
    int threads = 0;         // 0 = all available cores
};

struct GraphMeta {
    double kappa = 0.0;
    double sigma = 0.0;
    double epsilon = 0.0;
};

struct SlotFit {
    SlotHyperParams hyper;
    double log_evidence = 0.0;
    double f_init = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Maximizes the slot evidence over (alpha, gamma, pi). Restart 0 starts from
/// the scale-matched initialization; later restarts perturb it with unit
/// Gaussian noise in the packed coordinates. Best restart wins.
inline SlotFit fit_slot(const SlotGram& gram, const DiffusionGrid& grid,
                        const OptimizerConfig& cfg, std::uint64_t seed = 0) {
    EvidenceObjective obj(gram, grid);
    const int K = grid.K();

    SlotHyperParams init;
    init.alpha = 1.0 / std::max(gram.persistence_mse, 1e-12);
    init.gamma = init.alpha;
    init.pi = Eigen::VectorXd::Constant(K, 1.0 / K);
    Eigen::VectorXd x0 = obj.pack(init);

    LbfgsOptions lopt;
    lopt.max_iters = cfg.max_iters;
    lopt.grad_tol = cfg.grad_tol;

    auto fun = [&obj](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        return obj.value_grad(x, g);
    };

    SlotFit best;
    Eigen::VectorXd g0(obj.dim());
    best.f_init = obj.value_grad(x0, g0);
    bool have = false;
    const int restarts = std::max(cfg.restarts, 1);
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd xs = x0;
        if (r > 0) {
            std::seed_seq sq{static_cast<unsigned>(seed & 0xffffffffu),
                            static_cast<unsigned>(seed >> 32),
                            static_cast<unsigned>(gram.t), static_cast<unsigned>(r)};
            std::mt19937_64 rng(sq);
            std::normal_distribution<double> noise(0.0, 1.0);
            for (int i = 0; i < xs.size(); ++i) xs(i) += noise(rng);
        }
        LbfgsResult res = lbfgs_maximize(fun, xs, lopt);
        if (!have || res.fx > best.log_evidence) {
            have = true;
            best.hyper = obj.unpack(res.x);
            best.log_evidence = res.fx;
            best.converged = res.converged;
            best.iterations = res.iterations;
        }
    }
    return best;
}

namespace detail {

[[noreturn]] inline void rethrow_with_slot(int t, const std::exception& e) {
    std::string msg = "slot " + std::to_string(t) + ": " + e.what();
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
    if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(msg);
    if (dynamic_cast<const IoError*>(&e)) throw IoError(msg);
    if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
    throw std::runtime_error(msg);
}

} // namespace detail

/// Trains every slot of a normalized day tensor: transitions t -> t+1 for
/// t in [0, T-2], plus the cross-midnight slot T-1 (pairing day d's last
/// snapshot with day d+1's first) when cfg.wrap is set. Slots are fitted
/// independently, in parallel, and merged by slot index.
inline TrainedModel train(const DayTensor& data, const DiffusionGrid& grid,
                          const NormStats& norm, const TrainConfig& cfg = {},
                          const GraphMeta& meta = {}) {
    if (data.m < 2) throw ConfigError("training needs at least 2 days");
    const int T = data.T;
    const int n_slots = cfg.wrap ? T : T - 1;

    TrainedModel model;
    model.T = T;
    model.ts_minutes = data.ts_minutes;
    model.wrap = cfg.wrap;
    model.sensor_ids = data.sensor_ids;
    model.norm = norm;
    model.kappa = meta.kappa;
    model.sigma = meta.sigma;
    model.epsilon = meta.epsilon;
    model.taus = grid.taus;
    model.slots.resize(n_slots);
    model.slot_converged.assign(n_slots, false);
    model.slot_iterations.assign(n_slots, 0);
    model.train_day_labels = data.day_labels;

    parallel_for(n_slots, resolve_threads(cfg.threads), [&](int t) {
        try {
            Eigen::MatrixXd Xt, Xt1;
            if (t < T - 1) {
                Xt = data.slots[t];
                Xt1 = data.slots[t + 1];
            } else {
                Xt = data.slots[T - 1].leftCols(data.m - 1);
                Xt1 = data.slots[0].rightCols(data.m - 1);
            }
            SlotGram gram = build_slot_gram(t, Xt, Xt1, grid);
            SlotFit fit = fit_slot(gram, grid, cfg.opt, cfg.seed);
            SlotModel sm = map_transition(gram, grid, fit.hyper);
            sm.log_evidence = fit.log_evidence;
            model.slots[t] = std::move(sm);
            model.slot_converged[t] = fit.converged ? 1 : 0;
            model.slot_iterations[t] = fit.iterations;
        } catch (const std::exception& e) {
            detail::rethrow_with_slot(t, e);
        }
    });
    return model;
}

} // namespace gdlm
