#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"

namespace gdlm {

/// Evenly sampled multivariate speed series. Value 0 means missing.
struct SpeedSeries {
    std::vector<std::string> sensor_ids;
    std::vector<std::int64_t> stamps_min;  // minutes since 1970-01-01, strictly increasing
    Eigen::MatrixXd values;                // rows = timestamps, cols = sensors, 0 = missing
    int ts_minutes = 0;                    // sampling interval; 0 when under 2 rows

    int n_sensors() const { return static_cast<int>(sensor_ids.size()); }
    long n_rows() const { return static_cast<long>(stamps_min.size()); }
};

/// Parses a speed CSV: header `timestamp,<id>,...`, ISO timestamps, mph values,
/// empty cell or 0 = missing. Spacing must be constant; the first irregularity
/// is reported with its line number.
inline SpeedSeries load_speeds(const std::string& path, const std::string& format = "csv") {
    if (format != "csv") throw ConfigError("unsupported speed format '" + format + "'");
    auto in = open_text_file(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "timestamp")
        throw IoError(path + ": expected header 'timestamp,<sensor ids>'");

    SpeedSeries s;
    s.sensor_ids.assign(header.begin() + 1, header.end());
    const int n = s.n_sensors();

    std::vector<double> flat;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != n + 1)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(n + 1) + " columns, got " + std::to_string(cells.size()));
        std::int64_t ts;
        if (!parse_timestamp_minutes(cells[0], ts))
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed timestamp '" +
                          cells[0] + "'");
        if (!s.stamps_min.empty()) {
            std::int64_t prev = s.stamps_min.back();
            if (ts <= prev)
                throw IoError(path + ":" + std::to_string(line_no) +
                              ": timestamps not strictly increasing at '" + cells[0] + "'");
            std::int64_t delta = ts - prev;
            if (s.stamps_min.size() == 1) {
                s.ts_minutes = static_cast<int>(delta);
            } else if (delta != s.ts_minutes) {
                throw IoError(path + ":" + std::to_string(line_no) + ": timestamp gap before '" +
                              cells[0] + "': expected spacing " + std::to_string(s.ts_minutes) +
                              " min, got " + std::to_string(delta) + " min");
            }
        }
        s.stamps_min.push_back(ts);
        for (int j = 0; j < n; ++j) {
            const auto& c = cells[j + 1];
            double v = c.empty() ? 0.0
                                 : parse_double(c, path + ":" + std::to_string(line_no) +
                                                       " column " + s.sensor_ids[j]);
            flat.push_back(v);
        }
    }

    const long rows = static_cast<long>(s.stamps_min.size());
    s.values.resize(rows, n);
    for (long r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j) s.values(r, j) = flat[r * n + j];
    return s;
}

/// Averages observed values over windows of `factor` consecutive rows;
/// all-missing windows stay missing. A trailing partial window is dropped.
inline SpeedSeries downsample(const SpeedSeries& s, int factor) {
    if (factor <= 0) throw ConfigError("downsample factor must be positive");
    if (factor == 1) return s;
    SpeedSeries out;
    out.sensor_ids = s.sensor_ids;
    out.ts_minutes = s.ts_minutes * factor;
    const long wins = s.n_rows() / factor;
    out.values.resize(wins, s.n_sensors());
    out.stamps_min.reserve(wins);
    for (long w = 0; w < wins; ++w) {
        out.stamps_min.push_back(s.stamps_min[w * factor]);
        for (int j = 0; j < s.n_sensors(); ++j) {
            double sum = 0.0;
            int cnt = 0;
            for (int k = 0; k < factor; ++k) {
                double v = s.values(w * factor + k, j);
                if (v != 0.0) {
                    sum += v;
                    ++cnt;
                }
            }
            out.values(w, j) = cnt > 0 ? sum / cnt : 0.0;
        }
    }
    return out;
}

/// Writes the CSV format load_speeds reads. Missing values are written as 0.
inline void write_speeds(const std::string& path, const SpeedSeries& s) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "timestamp";
    for (const auto& id : s.sensor_ids) out << ',' << id;
    out << '\n';
    char buf[64];
    for (long r = 0; r < s.n_rows(); ++r) {
        out << format_timestamp_minutes(s.stamps_min[r]);
        for (int j = 0; j < s.n_sensors(); ++j) {
            auto res = std::to_chars(buf, buf + sizeof buf, s.values(r, j));
            out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace gdlm
