#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "day_tensor.hpp"
#include "diffusion.hpp"
#include "distance_table.hpp"
#include "errors.hpp"
#include "sensor_graph.hpp"
#include "series.hpp"
#include "slot_model.hpp"

namespace gdlm {

/// Ground-truth configuration for planted-model data.
struct PlantedSpec {
    int N = 10;
    int T = 48;                   // slots per day (30-minute sampling)
    int m = 200;                  // days
    int K = 2;
    double graph_radius = 0.55;   // geometric-graph connection radius (unit square)
    double epsilon = 0.01;
    double alpha_true = 4.0;      // step-noise precision, raw units
    double gamma_true = 1e6;      // transition-residual precision
    Eigen::VectorXd pi_true;      // defaults to weights proportional to 0.2^k when empty
    double base_level = 60.0;     // mph
    double day_start_sd = 0.0;    // extra kick at each day start, raw units
    double residual_scale = 1.0;  // 0 plants H_t = H(pi) exactly
    double noise_scale = 1.0;     // 0 disables step noise
};

struct SyntheticData {
    PlantedSpec spec;
    std::uint64_t seed = 0;
    SpeedSeries series;
    DistanceTable distances;
    Eigen::MatrixXd distM;                 // dense shortest-path matrix
    SensorGraph graph;
    DiffusionGrid grid;
    std::vector<Eigen::MatrixXd> H_true;   // index t: slot t -> t+1; index T-1 wraps
};

namespace detail {

inline std::mt19937_64 seeded_rng(std::uint64_t seed, unsigned stream) {
    std::seed_seq sq{static_cast<unsigned>(seed & 0xffffffffu),
                    static_cast<unsigned>(seed >> 32), stream};
    return std::mt19937_64(sq);
}

/// Removes row and column means, so adding the result to a doubly stochastic
/// matrix keeps all row and column sums at 1.
inline Eigen::MatrixXd doubly_center(const Eigen::MatrixXd& G) {
    const double total = G.mean();
    Eigen::VectorXd rm = G.rowwise().mean();
    Eigen::VectorXd cm = G.colwise().mean();
    return G - rm.replicate(1, G.cols()) - cm.transpose().replicate(G.rows(), 1) +
           Eigen::MatrixXd::Constant(G.rows(), G.cols(), total);
}

/// Gaussian vector projected to zero sum, so injected randomness never moves
/// the network-wide level (volume stays conserved step to step).
inline Eigen::VectorXd zero_sum_noise(std::mt19937_64& rng, int n, double sd) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    v.array() -= v.mean();
    return sd * v;
}

} // namespace detail

/// Samples a planted instance of the generative model: a random connected
/// geometric sensor graph, per-slot transitions H_t = H(pi*) + residual with
/// residual entries ~ N(0, 1/gamma*), and m days rolled forward with
/// zero-sum step noise of precision alpha*, chained across midnights.
inline SyntheticData generate(const PlantedSpec& spec_in, std::uint64_t seed) {
    PlantedSpec spec = spec_in;
    if (spec.pi_true.size() == 0) {
        spec.pi_true.resize(spec.K);
        for (int k = 0; k < spec.K; ++k) spec.pi_true(k) = std::pow(0.2, k);
        spec.pi_true /= spec.pi_true.sum();
    }
    if (static_cast<int>(spec.pi_true.size()) != spec.K)
        throw ConfigError("pi_true length does not match K");
    if (1440 % spec.T != 0) throw ConfigError("T must divide 1440 minutes");
    SlotHyperParams check;
    check.alpha = spec.alpha_true;
    check.gamma = spec.gamma_true;
    check.pi = spec.pi_true;
    check.validate(spec.K);

    SyntheticData out;
    out.spec = spec;
    out.seed = seed;
    const int N = spec.N, T = spec.T, m = spec.m;

    bool built = false;
    for (unsigned attempt = 0; attempt < 10 && !built; ++attempt) {
        auto rng = detail::seeded_rng(seed, attempt);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Eigen::MatrixXd pts(N, 2);
        for (int i = 0; i < N; ++i) {
            pts(i, 0) = unif(rng);
            pts(i, 1) = unif(rng);
        }
        DistanceTable tab;
        for (int i = 0; i < N; ++i) {
            tab.sensor_ids.push_back("s" + std::to_string(i));
            tab.out_edges.emplace_back();
        }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                if (i == j) continue;
                double d = (pts.row(i) - pts.row(j)).norm();
                if (d <= spec.graph_radius) tab.out_edges[i].emplace_back(j, d);
            }
        Eigen::MatrixXd distM = all_pairs_shortest(tab);
        GraphConfig gcfg;
        gcfg.epsilon = spec.epsilon;
        gcfg.K = spec.K;
        try {
            out.graph = build_graph(distM, gcfg);
        } catch (const ConfigError&) {
            continue;  // disconnected sample, retry
        }
        out.distances = std::move(tab);
        out.distM = std::move(distM);
        built = true;
    }
    if (!built) throw ConfigError("no connected geometric graph after 10 attempts");

    GraphConfig gcfg;
    gcfg.epsilon = spec.epsilon;
    gcfg.K = spec.K;
    out.grid = build_grid(out.graph, gcfg);

    Eigen::MatrixXd Hprior = mix_kernels(out.grid, spec.pi_true);
    out.H_true.reserve(T);
    {
        auto rng = detail::seeded_rng(seed, 1000);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double res_sd = spec.residual_scale / std::sqrt(spec.gamma_true);
        for (int t = 0; t < T; ++t) {
            Eigen::MatrixXd G(N, N);
            for (int r = 0; r < N; ++r)
                for (int c = 0; c < N; ++c) G(r, c) = gauss(rng);
            out.H_true.push_back(Hprior + res_sd * detail::doubly_center(G));
        }
    }

    auto rng = detail::seeded_rng(seed, 2000);
    const double step_sd = spec.noise_scale / std::sqrt(spec.alpha_true);
    SpeedSeries& s = out.series;
    for (int i = 0; i < N; ++i) s.sensor_ids.push_back("s" + std::to_string(i));
    s.ts_minutes = 1440 / T;
    const std::int64_t t0 = gdlm::detail::days_from_civil(2024, 1, 1) * 1440;
    s.values.resize(static_cast<long>(m) * T, N);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(N, spec.base_level);
    if (spec.day_start_sd > 0.0) x += detail::zero_sum_noise(rng, N, spec.day_start_sd);
    for (int d = 0; d < m; ++d) {
        for (int t = 0; t < T; ++t) {
            long row = static_cast<long>(d) * T + t;
            s.stamps_min.push_back(t0 + row * s.ts_minutes);
            s.values.row(row) = x.transpose();
            Eigen::VectorXd next = out.H_true[t] * x;
            if (step_sd > 0.0) next += detail::zero_sum_noise(rng, N, step_sd);
            if (t == T - 1 && spec.day_start_sd > 0.0)
                next += detail::zero_sum_noise(rng, N, spec.day_start_sd);
            x = next;
        }
    }
    return out;
}

inline void write_distances_csv(const std::string& path, const SyntheticData& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "from,to,distance\n";
    char buf[64];
    for (size_t i = 0; i < data.distances.sensor_ids.size(); ++i)
        for (const auto& [j, d] : data.distances.out_edges[i]) {
            auto res = std::to_chars(buf, buf + sizeof buf, d);
            out << data.distances.sensor_ids[i] << ',' << data.distances.sensor_ids[j] << ',';
            out.write(buf, res.ptr - buf);
            out << '\n';
        }
    if (!out) throw IoError("write failed for " + path);
}

/// Records every planted quantity next to the emitted series.
inline void write_truth_json(const std::string& path, const SyntheticData& data) {
    nlohmann::json j;
    j["seed"] = data.seed;
    j["N"] = data.spec.N;
    j["T"] = data.spec.T;
    j["m"] = data.spec.m;
    j["K"] = data.spec.K;
    j["epsilon"] = data.spec.epsilon;
    j["alpha_true"] = data.spec.alpha_true;
    j["gamma_true"] = data.spec.gamma_true;
    j["pi_true"] = std::vector<double>(data.spec.pi_true.data(),
                                       data.spec.pi_true.data() + data.spec.pi_true.size());
    j["base_level"] = data.spec.base_level;
    j["day_start_sd"] = data.spec.day_start_sd;
    j["residual_scale"] = data.spec.residual_scale;
    j["noise_scale"] = data.spec.noise_scale;
    j["kappa"] = data.graph.kappa;
    j["sigma"] = data.graph.sigma;
    j["taus"] = data.grid.taus;
    nlohmann::json hs = nlohmann::json::array();
    for (const auto& H : data.H_true) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < H.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < H.cols(); ++c) row.push_back(H(r, c));
            rows.push_back(std::move(row));
        }
        hs.push_back(std::move(rows));
    }
    j["H_true"] = std::move(hs);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

} // namespace gdlm
