#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace gdlm {

inline constexpr char kModelMagic[8] = {'G', 'D', 'L', 'M', 'M', 'D', 'L', '1'};

/// Container layout: 8-byte magic, uint32 LE JSON length, JSON metadata,
/// then n_slots * N * N transition entries as little-endian doubles,
/// row-major, in slot order.
inline void save_model(const std::string& path, const TrainedModel& model) {
    nlohmann::json j;
    j["schema_version"] = kModelSchemaVersion;
    j["T"] = model.T;
    j["ts_minutes"] = model.ts_minutes;
    j["wrap"] = model.wrap;
    j["sensor_ids"] = model.sensor_ids;
    j["kappa"] = model.kappa;
    j["sigma"] = model.sigma;
    j["epsilon"] = model.epsilon;
    j["taus"] = model.taus;
    j["norm"]["mu"] = std::vector<double>(model.norm.mu.data(), model.norm.mu.data() + model.norm.mu.size());
    j["norm"]["sd"] = std::vector<double>(model.norm.sd.data(), model.norm.sd.data() + model.norm.sd.size());
    j["train_day_labels"] = model.train_day_labels;
    nlohmann::json slots = nlohmann::json::array();
    for (int t = 0; t < model.n_slots(); ++t) {
        const SlotModel& sm = model.slots[t];
        nlohmann::json s;
        s["t"] = sm.t;
        s["alpha"] = sm.hyper.alpha;
        s["gamma"] = sm.hyper.gamma;
        s["pi"] = std::vector<double>(sm.hyper.pi.data(), sm.hyper.pi.data() + sm.hyper.pi.size());
        s["c_data"] = sm.c_data;
        s["c_prior"] = sm.c_prior;
        s["log_evidence"] = sm.log_evidence;
        s["converged"] = model.slot_converged.empty() ? true : model.slot_converged[t] != 0;
        s["iterations"] = model.slot_iterations.empty() ? 0 : model.slot_iterations[t];
        slots.push_back(std::move(s));
    }
    j["slots"] = std::move(slots);
    std::string meta = j.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kModelMagic, sizeof kModelMagic);
    std::uint32_t len = static_cast<std::uint32_t>(meta.size());
    char lenbuf[4];
    for (int i = 0; i < 4; ++i) lenbuf[i] = static_cast<char>((len >> (8 * i)) & 0xff);
    out.write(lenbuf, 4);
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    const int N = model.N();
    std::vector<double> row(N);
    for (const SlotModel& sm : model.slots)
        for (int r = 0; r < N; ++r) {
            for (int c = 0; c < N; ++c) row[c] = sm.H_hat(r, c);
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(N * sizeof(double)));
        }
    if (!out) throw IoError("write failed for " + path);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kModelMagic, 8) != 0)
        throw IoError(path + ": not a model file (bad magic)");
    char lenbuf[4];
    in.read(lenbuf, 4);
    if (!in) throw IoError(path + ": truncated header");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
        len |= static_cast<std::uint32_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
    std::string meta(len, '\0');
    in.read(meta.data(), len);
    if (!in) throw IoError(path + ": truncated metadata");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(meta);
    } catch (const std::exception& e) {
        throw IoError(path + ": metadata parse error: " + e.what());
    }
    int schema = j.value("schema_version", -1);
    if (schema != kModelSchemaVersion)
        throw IoError(path + ": unsupported schema version " + std::to_string(schema));

    TrainedModel model;
    model.T = j.at("T").get<int>();
    model.ts_minutes = j.at("ts_minutes").get<int>();
    model.wrap = j.at("wrap").get<bool>();
    model.sensor_ids = j.at("sensor_ids").get<std::vector<std::string>>();
    model.kappa = j.at("kappa").get<double>();
    model.sigma = j.at("sigma").get<double>();
    model.epsilon = j.at("epsilon").get<double>();
    model.taus = j.at("taus").get<std::vector<double>>();
    auto mu = j.at("norm").at("mu").get<std::vector<double>>();
    auto sd = j.at("norm").at("sd").get<std::vector<double>>();
    model.norm.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), static_cast<long>(mu.size()));
    model.norm.sd = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<long>(sd.size()));
    model.train_day_labels = j.value("train_day_labels", std::vector<std::string>{});

    const int N = model.N();
    const auto& slots = j.at("slots");
    const int n_slots = static_cast<int>(slots.size());
    model.slots.resize(n_slots);
    model.slot_converged.assign(n_slots, 1);
    model.slot_iterations.assign(n_slots, 0);
    for (int t = 0; t < n_slots; ++t) {
        const auto& s = slots[t];
        SlotModel& sm = model.slots[t];
        sm.t = s.at("t").get<int>();
        sm.hyper.alpha = s.at("alpha").get<double>();
        sm.hyper.gamma = s.at("gamma").get<double>();
        auto pi = s.at("pi").get<std::vector<double>>();
        sm.hyper.pi = Eigen::Map<Eigen::VectorXd>(pi.data(), static_cast<long>(pi.size()));
        sm.c_data = s.at("c_data").get<double>();
        sm.c_prior = s.at("c_prior").get<double>();
        sm.log_evidence = s.at("log_evidence").is_null()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : s.at("log_evidence").get<double>();
        model.slot_converged[t] = s.value("converged", true) ? 1 : 0;
        model.slot_iterations[t] = s.value("iterations", 0);
    }

    const std::streamsize want =
        static_cast<std::streamsize>(n_slots) * N * N * static_cast<std::streamsize>(sizeof(double));
    std::vector<double> row(N);
    for (int t = 0; t < n_slots; ++t) {
        model.slots[t].H_hat.resize(N, N);
        for (int r = 0; r < N; ++r) {
            in.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(N * sizeof(double)));
            if (!in)
                throw IoError(path + ": transition payload shorter than " + std::to_string(want) +
                              " bytes");
            for (int c = 0; c < N; ++c) model.slots[t].H_hat(r, c) = row[c];
        }
    }
    char extra;
    if (in.read(&extra, 1))
        throw IoError(path + ": trailing bytes after transition payload");
    return model;
}

} // namespace gdlm
