#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <gdlm/model_io.hpp>

#include "test_support.hpp"

using namespace gdlm;

namespace {

TrainedModel sample_model(std::uint64_t seed) {
    auto rng = testsup::rng(seed);
    TrainedModel m;
    m.T = 4;
    m.ts_minutes = 360;
    m.wrap = true;
    m.sensor_ids = {"401", "402", "403"};
    m.norm.mu = testsup::random_vector(rng, 3, 5.0);
    m.norm.sd = (testsup::random_vector(rng, 3, 0.2).array().abs() + 0.5).matrix();
    m.kappa = 2.5;
    m.sigma = 1.25;
    m.epsilon = 0.01;
    m.taus = {0.03, 0.7, 4.0};
    m.train_day_labels = {"2024-01-01", "2024-01-02"};
    for (int t = 0; t < 4; ++t) {
        SlotModel sm;
        sm.t = t;
        sm.H_hat = testsup::random_matrix(rng, 3, 3);
        sm.hyper.alpha = 3.5 + t;
        sm.hyper.gamma = 110.0 + t;
        sm.hyper.pi = testsup::random_simplex(rng, 3);
        sm.c_data = 0.25 * (t + 1) / 4.0 + 0.1;
        sm.c_prior = 1.0 - sm.c_data;
        sm.log_evidence = t == 1 ? std::numeric_limits<double>::quiet_NaN() : -42.5 - t;
        m.slots.push_back(std::move(sm));
    }
    m.slot_converged = {1, 0, 1, 1};
    m.slot_iterations = {12, 200, 33, 7};
    return m;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::path(::testing::TempDir()) / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string header_with_meta(const std::string& meta) {
    std::string bytes(kModelMagic, sizeof kModelMagic);
    std::uint32_t len = static_cast<std::uint32_t>(meta.size());
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
    return bytes + meta;
}

std::string load_error(const std::string& path) {
    try {
        load_model(path);
    } catch (const IoError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ModelIo, RoundTripPreservesEverything) {
    TrainedModel m = sample_model(3001);
    std::string path = temp_path("roundtrip.gdlm");
    save_model(path, m);
    TrainedModel r = load_model(path);

    EXPECT_EQ(r.T, m.T);
    EXPECT_EQ(r.ts_minutes, m.ts_minutes);
    EXPECT_EQ(r.wrap, m.wrap);
    EXPECT_EQ(r.sensor_ids, m.sensor_ids);
    EXPECT_EQ(r.train_day_labels, m.train_day_labels);
    EXPECT_EQ(r.kappa, m.kappa);
    EXPECT_EQ(r.sigma, m.sigma);
    EXPECT_EQ(r.epsilon, m.epsilon);
    ASSERT_EQ(r.taus.size(), m.taus.size());
    for (size_t k = 0; k < m.taus.size(); ++k) EXPECT_EQ(r.taus[k], m.taus[k]);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(r.norm.mu(i), m.norm.mu(i));
        EXPECT_EQ(r.norm.sd(i), m.norm.sd(i));
    }
    ASSERT_EQ(r.n_slots(), m.n_slots());
    for (int t = 0; t < m.n_slots(); ++t) {
        const auto& a = m.slots[t];
        const auto& b = r.slots[t];
        EXPECT_EQ(b.t, a.t);
        EXPECT_EQ(b.hyper.alpha, a.hyper.alpha);
        EXPECT_EQ(b.hyper.gamma, a.hyper.gamma);
        ASSERT_EQ(b.hyper.pi.size(), a.hyper.pi.size());
        for (int k = 0; k < a.hyper.pi.size(); ++k) EXPECT_EQ(b.hyper.pi(k), a.hyper.pi(k));
        EXPECT_EQ(b.c_data, a.c_data);
        EXPECT_EQ(b.c_prior, a.c_prior);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EXPECT_EQ(b.H_hat(i, j), a.H_hat(i, j));
        if (t == 1) {
            EXPECT_TRUE(std::isnan(b.log_evidence));
        } else {
            EXPECT_EQ(b.log_evidence, a.log_evidence);
        }
    }
    EXPECT_EQ(r.slot_converged, m.slot_converged);
    EXPECT_EQ(r.slot_iterations, m.slot_iterations);
}

TEST(ModelIo, RejectsForeignAndTruncatedFiles) {
    std::string path = temp_path("bad.gdlm");

    write_bytes(path, "NOTMODEL plus some trailing content");
    EXPECT_NE(load_error(path).find("not a model file (bad magic)"), std::string::npos);

    write_bytes(path, std::string(kModelMagic, 6));  // shorter than the magic itself
    EXPECT_NE(load_error(path).find("not a model file (bad magic)"), std::string::npos);

    write_bytes(path, std::string(kModelMagic, sizeof kModelMagic));
    EXPECT_NE(load_error(path).find("truncated header"), std::string::npos);

    std::string short_meta = header_with_meta("{\"schema_version\":1}");
    write_bytes(path, short_meta.substr(0, short_meta.size() - 5));
    EXPECT_NE(load_error(path).find("truncated metadata"), std::string::npos);

    write_bytes(path, header_with_meta("this is not json"));
    EXPECT_NE(load_error(path).find("metadata parse error"), std::string::npos);

    write_bytes(path, header_with_meta("{\"schema_version\":99}"));
    EXPECT_NE(load_error(path).find("unsupported schema version 99"), std::string::npos);

    EXPECT_NE(load_error(temp_path("no_such_file.gdlm")).find("cannot open model file"),
              std::string::npos);
}

TEST(ModelIo, DetectsPayloadSizeMismatch) {
    TrainedModel m = sample_model(3002);
    std::string path = temp_path("payload.gdlm");

    save_model(path, m);
    auto full = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full - 8);
    EXPECT_NE(load_error(path).find("transition payload shorter"), std::string::npos);

    save_model(path, m);
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out.put('\0');
    }
    EXPECT_NE(load_error(path).find("trailing bytes after transition payload"), std::string::npos);
}
