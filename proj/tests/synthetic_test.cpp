#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include <gdlm/synthetic.hpp>

#include "test_support.hpp"

using namespace gdlm;

namespace {

PlantedSpec small_spec() {
    PlantedSpec spec;
    spec.N = 6;
    spec.T = 6;
    spec.m = 4;
    spec.K = 3;
    spec.graph_radius = 0.9;
    return spec;
}

std::string temp_path(const std::string& name) {
    return ::testing::TempDir() + name;
}

}  // namespace

TEST(Synthetic, NoiselessModePlantsExactDynamics) {
    PlantedSpec spec = small_spec();
    spec.residual_scale = 0.0;
    spec.noise_scale = 0.0;
    spec.day_start_sd = 2.0;  // day-start kicks keep the trajectory non-constant
    SyntheticData data = generate(spec, 11);

    Eigen::MatrixXd Hprior = mix_kernels(data.grid, data.spec.pi_true);
    ASSERT_EQ(static_cast<int>(data.H_true.size()), spec.T);
    for (const auto& H : data.H_true) EXPECT_LT((H - Hprior).cwiseAbs().maxCoeff(), 1e-15);

    const auto& v = data.series.values;
    ASSERT_EQ(v.rows(), static_cast<long>(spec.T) * spec.m);
    for (long r = 0; r + 1 < v.rows(); ++r) {
        int t = static_cast<int>(r % spec.T);
        if (t == spec.T - 1) continue;  // the day boundary adds the next kick
        Eigen::VectorXd want = Hprior * v.row(r).transpose();
        EXPECT_LT((v.row(r + 1).transpose() - want).cwiseAbs().maxCoeff(), 1e-12) << "row " << r;
    }
    // The kicks actually moved the signal off the flat base level.
    EXPECT_GT((v.array() - spec.base_level).abs().maxCoeff(), 0.1);
}

TEST(Synthetic, TransitionsStayDoublyStochastic) {
    SyntheticData data = generate(small_spec(), 12);
    const int N = data.spec.N;
    for (const auto& H : data.H_true) {
        EXPECT_LT((H.rowwise().sum() - Eigen::VectorXd::Ones(N)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((H.colwise().sum() - Eigen::RowVectorXd::Ones(N)).cwiseAbs().maxCoeff(), 1e-10);
    }
    // Residuals are real: the planted transitions differ across slots.
    EXPECT_GT((data.H_true[0] - data.H_true[1]).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Synthetic, StepNoiseNeverMovesTheNetworkTotal) {
    SyntheticData data = generate(small_spec(), 13);
    const auto& v = data.series.values;
    double first = v.row(0).sum();
    for (long r = 0; r + 1 < v.rows(); ++r) {
        EXPECT_NEAR(v.row(r + 1).sum(), v.row(r).sum(), 1e-8) << "row " << r;
    }
    EXPECT_NEAR(v.row(v.rows() - 1).sum(), first, 1e-7);
}

TEST(Synthetic, SameSeedReproducesEverything) {
    SyntheticData a = generate(small_spec(), 14);
    SyntheticData b = generate(small_spec(), 14);
    EXPECT_EQ((a.series.values - b.series.values).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_EQ(a.H_true.size(), b.H_true.size());
    for (size_t t = 0; t < a.H_true.size(); ++t)
        EXPECT_EQ((a.H_true[t] - b.H_true[t]).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((a.distM - b.distM).cwiseAbs().maxCoeff(), 0.0);

    SyntheticData c = generate(small_spec(), 15);
    EXPECT_GT((a.series.values - c.series.values).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Synthetic, EmittedFilesFeedThePipelineBack) {
    SyntheticData data = generate(small_spec(), 16);

    std::string dist_path = temp_path("synth_distances.csv");
    write_distances_csv(dist_path, data);
    DistanceTable tab = load_distances(dist_path);
    EXPECT_EQ(tab.sensor_ids, data.distances.sensor_ids);
    Eigen::MatrixXd distM = all_pairs_shortest(tab);
    EXPECT_LT((distM - data.distM).cwiseAbs().maxCoeff(), 1e-12);

    std::string speeds_path = temp_path("synth_speeds.csv");
    write_speeds(speeds_path, data.series);
    SpeedSeries series = load_speeds(speeds_path);
    EXPECT_EQ(series.sensor_ids, data.series.sensor_ids);
    EXPECT_EQ(series.ts_minutes, data.series.ts_minutes);
    EXPECT_EQ((series.values - data.series.values).cwiseAbs().maxCoeff(), 0.0);

    DayTensor dt = to_day_tensor(series);
    EXPECT_EQ(dt.T, data.spec.T);
    EXPECT_EQ(dt.m, data.spec.m);
    EXPECT_EQ(dt.day_labels.front(), "2024-01-01");
    for (const auto& mask : dt.masks) EXPECT_TRUE(mask.all());

    std::string truth_path = temp_path("synth_truth.json");
    write_truth_json(truth_path, data);
    std::ifstream in(truth_path);
    auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 16u);
    auto pi = j.at("pi_true").get<std::vector<double>>();
    ASSERT_EQ(pi.size(), 3u);  // empty pi_true defaults to weights 0.2^k, normalized
    EXPECT_NEAR(pi[0], 25.0 / 31.0, 1e-12);
    EXPECT_NEAR(pi[1], 5.0 / 31.0, 1e-12);
    EXPECT_NEAR(pi[2], 1.0 / 31.0, 1e-12);
    EXPECT_EQ(j.at("H_true").size(), static_cast<size_t>(data.spec.T));
    EXPECT_EQ(j.at("H_true")[0].size(), static_cast<size_t>(data.spec.N));
    EXPECT_EQ(j.at("taus").size(), static_cast<size_t>(data.spec.K));
}

TEST(Synthetic, ValidatesThePlantedSpec) {
    PlantedSpec bad_pi = small_spec();
    bad_pi.pi_true = Eigen::Vector2d(0.5, 0.5);
    try {
        generate(bad_pi, 1);
        FAIL() << "expected pi length guard";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("pi_true length"), std::string::npos);
    }

    PlantedSpec bad_T = small_spec();
    bad_T.T = 7;
    try {
        generate(bad_T, 1);
        FAIL() << "expected slot-count guard";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("1440"), std::string::npos);
    }

    PlantedSpec tiny_radius = small_spec();
    tiny_radius.graph_radius = 0.01;
    try {
        generate(tiny_radius, 7);
        FAIL() << "expected connectivity guard";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("no connected geometric graph"), std::string::npos);
    }
}
