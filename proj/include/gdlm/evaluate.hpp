#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "day_tensor.hpp"
#include "errors.hpp"
#include "forecast.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace gdlm {

struct HorizonResult {
    int steps = 0;
    int minutes = 0;
    double rmse_model_masked = 0.0;
    double rmse_model_unmasked = 0.0;
    double rmse_baseline_masked = 0.0;
    double rmse_baseline_unmasked = 0.0;
    long count_masked = 0;    // points entering the masked mean
    long count_unmasked = 0;
    bool has_points = false;  // false when no (t, d) pair reaches this horizon
};

struct DiagnosticsRow {
    int t = 0;
    int minutes_of_day = 0;
    double alpha = 0.0;
    double gamma = 0.0;
    double c_data = 0.0;
    double c_prior = 0.0;
    Eigen::VectorXd pi;
    double pi_ratio = 0.0;    // pi(tau_0) / pi(tau_inf), denominator floored
    bool ratio_floored = false;
    double log_evidence = 0.0;
};

struct EvalReport {
    bool masked_primary = true;
    bool baseline_only = false;
    std::vector<HorizonResult> horizons;
    // Masked model RMSE per target slot of day, one row per horizon;
    // NaN where a slot collected no points.
    std::vector<std::vector<double>> slot_rmse;
    std::vector<DiagnosticsRow> diagnostics;
    std::vector<std::string> warnings;
};

/// Per-slot learned diagnostics: contribution curve and the short/long
/// mixing ratio (infinity-safe: denominator floored at 1e-12 and flagged).
inline std::vector<DiagnosticsRow> diagnostics_series(const TrainedModel& model) {
    std::vector<DiagnosticsRow> rows;
    rows.reserve(model.n_slots());
    const int K = model.K();
    for (const SlotModel& sm : model.slots) {
        DiagnosticsRow r;
        r.t = sm.t;
        r.minutes_of_day = sm.t * model.ts_minutes;
        r.alpha = sm.hyper.alpha;
        r.gamma = sm.hyper.gamma;
        r.c_data = sm.c_data;
        r.c_prior = sm.c_prior;
        r.pi = sm.hyper.pi;
        double tail = sm.hyper.pi(K - 1);
        r.ratio_floored = tail < 1e-12;
        r.pi_ratio = sm.hyper.pi(0) / std::max(tail, 1e-12);
        r.log_evidence = sm.log_evidence;
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Pooled RMSE per horizon over all test (slot, day, sensor) points, for the
/// model and the persistence baseline, masked and unmasked. Predictions are
/// batched per base slot: one propagation pass serves every day column and
/// every requested horizon.
inline EvalReport rmse(const TrainedModel& model, const DayTensor& test,
                       const std::vector<int>& horizons_steps, bool masked = true,
                       bool baseline_only = false, int threads = 0) {
    if (horizons_steps.empty()) throw ConfigError("no horizons requested");
    for (int h : horizons_steps)
        if (h < 1) throw ConfigError("horizons must be at least 1 step");
    if (test.N() != model.N() || test.sensor_ids != model.sensor_ids)
        throw ValidationError("test data sensors do not match the model");
    if (test.T != model.T)
        throw ValidationError("test data has " + std::to_string(test.T) +
                              " slots per day, model expects " + std::to_string(model.T));

    EvalReport rep;
    rep.masked_primary = masked;
    rep.baseline_only = baseline_only;
    {
        std::set<std::string> train_days(model.train_day_labels.begin(),
                                         model.train_day_labels.end());
        std::string overlap;
        for (const auto& d : test.day_labels)
            if (train_days.count(d)) {
                if (!overlap.empty()) overlap += ", ";
                overlap += d;
            }
        if (!overlap.empty())
            rep.warnings.push_back("test days overlap training days: " + overlap);
    }

    const int T = test.T, m = test.m, N = test.N();
    const int H = static_cast<int>(horizons_steps.size());
    int hmax = *std::max_element(horizons_steps.begin(), horizons_steps.end());

    struct Acc {
        double se_model_masked = 0.0, se_model_unmasked = 0.0;
        double se_base_masked = 0.0, se_base_unmasked = 0.0;
        long n_masked = 0, n_unmasked = 0;
        std::vector<double> slot_se;  // per target slot, masked model
        std::vector<long> slot_n;
    };
    // partials[t][hi] holds everything contributed by base slot t, merged in
    // slot order afterwards so the reduction order is fixed.
    std::vector<std::vector<Acc>> partials(T, std::vector<Acc>(H));
    for (auto& row : partials)
        for (auto& a : row) {
            a.slot_se.assign(T, 0.0);
            a.slot_n.assign(T, 0);
        }

    // Normalized, mean-imputed conditioning matrices per slot.
    std::vector<Eigen::MatrixXd> Z(T);
    for (int t = 0; t < T; ++t) {
        Z[t].resize(N, m);
        for (int d = 0; d < m; ++d)
            for (int i = 0; i < N; ++i)
                Z[t](i, d) = test.masks[t](i, d)
                                 ? (test.slots[t](i, d) - model.norm.mu(i)) / model.norm.sd(i)
                                 : 0.0;
    }

    parallel_for(T, resolve_threads(threads), [&](int t) {
        Eigen::MatrixXd P;
        if (!baseline_only) P = Z[t];
        Eigen::MatrixXd pred_raw(N, m);
        for (int l = 1; l <= hmax; ++l) {
            int s = (t + l - 1) % T;
            if (!model.has_transition(s)) break;
            if (!baseline_only) P = (model.slots[s].H_hat * P).eval();
            int hi = -1;
            for (int q = 0; q < H; ++q)
                if (horizons_steps[q] == l) hi = q;
            if (hi < 0) continue;

            int off = (t + l) / T;
            int u = (t + l) % T;
            if (m - off <= 0) continue;
            if (!baseline_only)
                pred_raw = (P.array().colwise() * model.norm.sd.array()).colwise() +
                           model.norm.mu.array();
            Acc& acc = partials[t][hi];
            for (int d = 0; d + off < m; ++d) {
                for (int i = 0; i < N; ++i) {
                    double truth = test.slots[u](i, d + off);
                    bool observed = test.masks[u](i, d + off);
                    double base = test.masks[t](i, d) ? test.slots[t](i, d) : model.norm.mu(i);
                    double be = base - truth;
                    double me = baseline_only ? 0.0 : pred_raw(i, d) - truth;
                    acc.se_base_unmasked += be * be;
                    acc.se_model_unmasked += me * me;
                    ++acc.n_unmasked;
                    if (observed) {
                        acc.se_base_masked += be * be;
                        acc.se_model_masked += me * me;
                        ++acc.n_masked;
                        acc.slot_se[u] += me * me;
                        ++acc.slot_n[u];
                    }
                }
            }
        }
    });

    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.horizons.resize(H);
    rep.slot_rmse.assign(H, std::vector<double>(T, nan));
    for (int q = 0; q < H; ++q) {
        HorizonResult& hr = rep.horizons[q];
        hr.steps = horizons_steps[q];
        hr.minutes = horizons_steps[q] * test.ts_minutes;
        Acc tot;
        tot.slot_se.assign(T, 0.0);
        tot.slot_n.assign(T, 0);
        for (int t = 0; t < T; ++t) {
            const Acc& a = partials[t][q];
            tot.se_model_masked += a.se_model_masked;
            tot.se_model_unmasked += a.se_model_unmasked;
            tot.se_base_masked += a.se_base_masked;
            tot.se_base_unmasked += a.se_base_unmasked;
            tot.n_masked += a.n_masked;
            tot.n_unmasked += a.n_unmasked;
            for (int u = 0; u < T; ++u) {
                tot.slot_se[u] += a.slot_se[u];
                tot.slot_n[u] += a.slot_n[u];
            }
        }
        hr.count_masked = tot.n_masked;
        hr.count_unmasked = tot.n_unmasked;
        hr.has_points = tot.n_unmasked > 0;
        hr.rmse_model_masked = tot.n_masked > 0 ? std::sqrt(tot.se_model_masked / tot.n_masked) : nan;
        hr.rmse_baseline_masked =
            tot.n_masked > 0 ? std::sqrt(tot.se_base_masked / tot.n_masked) : nan;
        hr.rmse_model_unmasked =
            tot.n_unmasked > 0 ? std::sqrt(tot.se_model_unmasked / tot.n_unmasked) : nan;
        hr.rmse_baseline_unmasked =
            tot.n_unmasked > 0 ? std::sqrt(tot.se_base_unmasked / tot.n_unmasked) : nan;
        for (int u = 0; u < T; ++u)
            if (tot.slot_n[u] > 0) rep.slot_rmse[q][u] = std::sqrt(tot.slot_se[u] / tot.slot_n[u]);
    }
    rep.diagnostics = diagnostics_series(model);
    return rep;
}

namespace detail {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Per-horizon table: one row per horizon, model and baseline, both maskings.
inline void write_report_csv(const std::string& path, const EvalReport& rep) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "horizon_min,steps,rmse_model_masked,rmse_baseline_masked,"
           "rmse_model_unmasked,rmse_baseline_unmasked,count_masked,count_unmasked\n";
    for (const auto& hr : rep.horizons) {
        out << hr.minutes << ',' << hr.steps << ',';
        if (!hr.has_points) {
            out << ",,,," << 0 << ',' << 0 << '\n';
            continue;
        }
        out << (rep.baseline_only ? "" : detail::fmt_double(hr.rmse_model_masked)) << ','
            << detail::fmt_double(hr.rmse_baseline_masked) << ','
            << (rep.baseline_only ? "" : detail::fmt_double(hr.rmse_model_unmasked)) << ','
            << detail::fmt_double(hr.rmse_baseline_unmasked) << ',' << hr.count_masked << ','
            << hr.count_unmasked << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

/// Masked model RMSE by target slot of day, one row per (horizon, slot).
inline void write_slot_rmse_csv(const std::string& path, const EvalReport& rep, int ts_minutes) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "horizon_min,slot,minutes_of_day,rmse\n";
    for (size_t q = 0; q < rep.horizons.size(); ++q)
        for (size_t u = 0; u < rep.slot_rmse[q].size(); ++u) {
            double v = rep.slot_rmse[q][u];
            if (std::isnan(v)) continue;
            out << rep.horizons[q].minutes << ',' << u << ',' << u * ts_minutes << ','
                << detail::fmt_double(v) << '\n';
        }
    if (!out) throw IoError("write failed for " + path);
}

/// Full report as JSON: horizon table, slot curves, diagnostics, warnings.
inline void write_report_json(const std::string& path, const EvalReport& rep, int ts_minutes) {
    nlohmann::json j;
    j["masked_primary"] = rep.masked_primary;
    j["baseline_only"] = rep.baseline_only;
    j["ts_minutes"] = ts_minutes;
    j["warnings"] = rep.warnings;
    auto num_or_null = [](double v) {
        return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
    };
    nlohmann::json hs = nlohmann::json::array();
    for (const auto& hr : rep.horizons) {
        nlohmann::json h;
        h["horizon_min"] = hr.minutes;
        h["steps"] = hr.steps;
        h["has_points"] = hr.has_points;
        h["count_masked"] = hr.count_masked;
        h["count_unmasked"] = hr.count_unmasked;
        if (!rep.baseline_only) {
            h["rmse_model_masked"] = num_or_null(hr.rmse_model_masked);
            h["rmse_model_unmasked"] = num_or_null(hr.rmse_model_unmasked);
        }
        h["rmse_baseline_masked"] = num_or_null(hr.rmse_baseline_masked);
        h["rmse_baseline_unmasked"] = num_or_null(hr.rmse_baseline_unmasked);
        hs.push_back(std::move(h));
    }
    j["horizons"] = std::move(hs);
    nlohmann::json slot = nlohmann::json::array();
    for (size_t q = 0; q < rep.slot_rmse.size(); ++q) {
        nlohmann::json row = nlohmann::json::array();
        for (double v : rep.slot_rmse[q]) row.push_back(num_or_null(v));
        slot.push_back(std::move(row));
    }
    j["slot_rmse"] = std::move(slot);
    nlohmann::json diags = nlohmann::json::array();
    for (const auto& r : rep.diagnostics) {
        nlohmann::json d;
        d["slot"] = r.t;
        d["minutes_of_day"] = r.minutes_of_day;
        d["alpha"] = r.alpha;
        d["gamma"] = r.gamma;
        d["c_data"] = r.c_data;
        d["c_prior"] = r.c_prior;
        d["pi"] = std::vector<double>(r.pi.data(), r.pi.data() + r.pi.size());
        d["pi_ratio"] = r.pi_ratio;
        d["ratio_floored"] = r.ratio_floored;
        d["log_evidence"] = r.log_evidence;
        diags.push_back(std::move(d));
    }
    j["diagnostics"] = std::move(diags);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

/// Learned per-slot curves: contributions, mixture weights, mixing ratio.
inline void write_diagnostics_csv(const std::string& path,
                                  const std::vector<DiagnosticsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    int K = rows.empty() ? 0 : static_cast<int>(rows[0].pi.size());
    out << "slot,minutes_of_day,alpha,gamma,c_data,c_prior,pi_ratio,ratio_floored,log_evidence";
    for (int k = 0; k < K; ++k) out << ",pi_" << k;
    out << '\n';
    for (const auto& r : rows) {
        out << r.t << ',' << r.minutes_of_day << ',' << detail::fmt_double(r.alpha) << ','
            << detail::fmt_double(r.gamma) << ',' << detail::fmt_double(r.c_data) << ','
            << detail::fmt_double(r.c_prior) << ',' << detail::fmt_double(r.pi_ratio) << ','
            << (r.ratio_floored ? 1 : 0) << ',' << detail::fmt_double(r.log_evidence);
        for (int k = 0; k < K; ++k) out << ',' << detail::fmt_double(r.pi(k));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace gdlm
