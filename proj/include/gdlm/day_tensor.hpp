#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "series.hpp"

namespace gdlm {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Day-major layout of a speed series: one N x m matrix per time slot, where
/// column d holds the network snapshot at that slot of day d.
struct DayTensor {
    int T = 0;                             // slots per day
    int m = 0;                             // days
    int ts_minutes = 0;
    std::vector<std::string> sensor_ids;
    std::vector<std::string> day_labels;   // YYYY-MM-DD per day
    std::vector<std::int64_t> day_start_min;
    std::vector<Eigen::MatrixXd> slots;    // T matrices, each N x m; missing = 0
    std::vector<BoolArray> masks;          // true where observed

    int N() const { return static_cast<int>(sensor_ids.size()); }
};

/// Reshapes a series into whole days. Partial leading/trailing days are
/// dropped; a note per drop is appended to `warnings` when given.
inline DayTensor to_day_tensor(const SpeedSeries& s, std::vector<std::string>* warnings = nullptr) {
    if (s.ts_minutes <= 0) throw ConfigError("series too short to infer a sampling interval");
    if (1440 % s.ts_minutes != 0)
        throw ConfigError("sampling interval " + std::to_string(s.ts_minutes) +
                          " min does not divide a day");
    const int T = 1440 / s.ts_minutes;
    const long rows = s.n_rows();

    long first = 0;
    while (first < rows && s.stamps_min[first] % 1440 != 0) ++first;
    if (first > 0 && warnings)
        warnings->push_back("dropped " + std::to_string(first) + " rows before the first midnight");
    const long whole = (rows - first) / T;
    if (whole < 2) throw ConfigError("need at least 2 complete days, found " + std::to_string(whole < 0 ? 0 : whole));
    const long trailing = rows - first - whole * T;
    if (trailing > 0 && warnings)
        warnings->push_back("dropped " + std::to_string(trailing) + " trailing rows of a partial day");

    DayTensor dt;
    dt.T = T;
    dt.m = static_cast<int>(whole);
    dt.ts_minutes = s.ts_minutes;
    dt.sensor_ids = s.sensor_ids;
    const int N = dt.N();
    dt.slots.assign(T, Eigen::MatrixXd::Zero(N, dt.m));
    dt.masks.assign(T, BoolArray::Constant(N, dt.m, false));
    for (int d = 0; d < dt.m; ++d) {
        std::int64_t start = s.stamps_min[first + static_cast<long>(d) * T];
        dt.day_start_min.push_back(start);
        dt.day_labels.push_back(format_date_of_minutes(start));
        for (int t = 0; t < T; ++t) {
            long r = first + static_cast<long>(d) * T + t;
            for (int i = 0; i < N; ++i) {
                double v = s.values(r, i);
                dt.slots[t](i, d) = v;
                dt.masks[t](i, d) = v != 0.0;
            }
        }
    }
    return dt;
}

/// Inverse of to_day_tensor on whole-day series.
inline SpeedSeries flatten(const DayTensor& dt) {
    SpeedSeries s;
    s.sensor_ids = dt.sensor_ids;
    s.ts_minutes = dt.ts_minutes;
    const int N = dt.N();
    s.values.resize(static_cast<long>(dt.m) * dt.T, N);
    for (int d = 0; d < dt.m; ++d)
        for (int t = 0; t < dt.T; ++t) {
            s.stamps_min.push_back(dt.day_start_min[d] + static_cast<std::int64_t>(t) * dt.ts_minutes);
            for (int i = 0; i < N; ++i)
                s.values(static_cast<long>(d) * dt.T + t, i) = dt.masks[t](i, d) ? dt.slots[t](i, d) : 0.0;
        }
    return s;
}

inline DayTensor take_days(const DayTensor& dt, int from, int count) {
    DayTensor out;
    out.T = dt.T;
    out.m = count;
    out.ts_minutes = dt.ts_minutes;
    out.sensor_ids = dt.sensor_ids;
    out.day_labels.assign(dt.day_labels.begin() + from, dt.day_labels.begin() + from + count);
    out.day_start_min.assign(dt.day_start_min.begin() + from, dt.day_start_min.begin() + from + count);
    out.slots.reserve(dt.T);
    out.masks.reserve(dt.T);
    for (int t = 0; t < dt.T; ++t) {
        out.slots.push_back(dt.slots[t].middleCols(from, count));
        out.masks.push_back(dt.masks[t].middleCols(from, count));
    }
    return out;
}

/// Chronological whole-day split: the earliest floor(fraction * m) days train.
inline std::pair<DayTensor, DayTensor> split_days(const DayTensor& dt, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("train fraction must lie in (0,1)");
    int n_train = static_cast<int>(std::floor(fraction * dt.m + 1e-9));
    if (n_train < 1 || n_train >= dt.m)
        throw ConfigError("split leaves an empty side: " + std::to_string(n_train) + "/" +
                          std::to_string(dt.m - n_train) + " days");
    return {take_days(dt, 0, n_train), take_days(dt, n_train, dt.m - n_train)};
}

/// Per-sensor z-score statistics over observed entries only.
struct NormStats {
    Eigen::VectorXd mu;
    Eigen::VectorXd sd;
};

inline NormStats fit_norm(const DayTensor& train) {
    const int N = train.N();
    NormStats st;
    st.mu = Eigen::VectorXd::Zero(N);
    st.sd = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(N), sum2 = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(N);
    for (int t = 0; t < train.T; ++t)
        for (int d = 0; d < train.m; ++d)
            for (int i = 0; i < N; ++i)
                if (train.masks[t](i, d)) {
                    double v = train.slots[t](i, d);
                    sum(i) += v;
                    sum2(i) += v * v;
                    cnt(i) += 1.0;
                }
    std::string bad;
    for (int i = 0; i < N; ++i) {
        if (cnt(i) >= 2.0) {
            st.mu(i) = sum(i) / cnt(i);
            double var = sum2(i) / cnt(i) - st.mu(i) * st.mu(i);
            st.sd(i) = std::sqrt(std::max(var, 0.0));
        }
        if (!(st.sd(i) > 0.0)) {
            if (!bad.empty()) bad += ", ";
            bad += train.sensor_ids[i];
        }
    }
    if (!bad.empty()) throw ConfigError("zero-variance sensors in training data: " + bad);
    return st;
}

/// Z-scores observed entries; missing entries become 0, the training mean.
inline DayTensor apply_norm(const DayTensor& dt, const NormStats& st) {
    DayTensor out = dt;
    const int N = dt.N();
    for (int t = 0; t < dt.T; ++t)
        for (int d = 0; d < dt.m; ++d)
            for (int i = 0; i < N; ++i)
                out.slots[t](i, d) = dt.masks[t](i, d) ? (dt.slots[t](i, d) - st.mu(i)) / st.sd(i) : 0.0;
    return out;
}

inline DayTensor invert_norm(const DayTensor& dt, const NormStats& st) {
    DayTensor out = dt;
    for (int t = 0; t < dt.T; ++t)
        out.slots[t] = (dt.slots[t].array().colwise() * st.sd.array()).colwise() + st.mu.array();
    return out;
}

/// Denormalizes per-sensor rows of an N x d matrix (columns are snapshots).
inline Eigen::MatrixXd invert_norm_matrix(const Eigen::MatrixXd& X, const NormStats& st) {
    return ((X.array().colwise() * st.sd.array()).colwise() + st.mu.array()).matrix();
}

} // namespace gdlm
