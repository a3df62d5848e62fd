#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <gdlm/distance_table.hpp>

#include "test_support.hpp"

using namespace gdlm;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

DistanceTable table_from_edges(const std::vector<std::string>& ids,
                               const std::vector<std::tuple<int, int, double>>& edges) {
    DistanceTable table;
    table.sensor_ids = ids;
    table.out_edges.resize(ids.size());
    for (auto [a, b, d] : edges) table.out_edges[a].emplace_back(b, d);
    return table;
}

}  // namespace

TEST(DistanceTable, LoadsAndOrdersByFirstAppearance) {
    auto path = write_temp("gdlm_dist_basic.csv",
                           "from,to,distance\n"
                           "s2,s1,100\n"
                           "s1,s3,50\n"
                           "s3,s2,75\n");
    auto table = load_distances(path.string());
    ASSERT_EQ(table.sensor_ids.size(), 3u);
    EXPECT_EQ(table.sensor_ids[0], "s2");
    EXPECT_EQ(table.sensor_ids[1], "s1");
    EXPECT_EQ(table.sensor_ids[2], "s3");
}

TEST(DistanceTable, RejectsBadInputs) {
    EXPECT_THROW(load_distances("/nonexistent/gdlm.csv"), IoError);
    auto hdr = write_temp("gdlm_dist_hdr.csv", "a,b,c\ns1,s2,1\n");
    EXPECT_THROW(load_distances(hdr.string()), IoError);
    auto neg = write_temp("gdlm_dist_neg.csv", "from,to,distance\ns1,s2,-4\n");
    EXPECT_THROW(load_distances(neg.string()), ConfigError);
    auto self = write_temp("gdlm_dist_self.csv", "from,to,distance\ns1,s1,3\n");
    EXPECT_THROW(load_distances(self.string()), ConfigError);
    auto cols = write_temp("gdlm_dist_cols.csv", "from,to,distance\ns1,s2\n");
    EXPECT_THROW(load_distances(cols.string()), IoError);
    auto num = write_temp("gdlm_dist_num.csv", "from,to,distance\ns1,s2,abc\n");
    EXPECT_THROW(load_distances(num.string()), IoError);
}

TEST(ShortestPaths, TwoHopBeatsDirect) {
    auto table = table_from_edges({"a", "b", "c"},
                                  {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}});
    auto dist = all_pairs_shortest(table);
    EXPECT_DOUBLE_EQ(dist(0, 2), 2.0);  // a->b->c beats a->c
    EXPECT_DOUBLE_EQ(dist(2, 0), 2.0);  // symmetrized
    EXPECT_DOUBLE_EQ(dist(0, 0), 0.0);
}

TEST(ShortestPaths, DirectionalMinimum) {
    // a->b is 10 but b->a is 1; symmetrized distance must be 1.
    auto table = table_from_edges({"a", "b"}, {{0, 1, 10.0}, {1, 0, 1.0}});
    auto dist = all_pairs_shortest(table);
    EXPECT_DOUBLE_EQ(dist(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(dist(1, 0), 1.0);
}

TEST(ShortestPaths, DirectedCycleUsesReversedEdge) {
    auto table = table_from_edges({"a", "b", "c"},
                                  {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
    auto dist = all_pairs_shortest(table);
    EXPECT_DOUBLE_EQ(dist(0, 2), 1.0);  // c->a beats a->b->c
    EXPECT_DOUBLE_EQ(dist(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(dist(1, 2), 1.0);
}

TEST(ShortestPaths, OneWayEdgeStillCounts) {
    auto table = table_from_edges({"a", "b"}, {{0, 1, 100.0}});
    auto dist = all_pairs_shortest(table);
    EXPECT_DOUBLE_EQ(dist(0, 1), 100.0);
    EXPECT_DOUBLE_EQ(dist(1, 0), 100.0);
}

TEST(ShortestPaths, UnreachableIsInfinite) {
    auto table = table_from_edges({"a", "b", "c"}, {{0, 1, 2.0}});
    auto dist = all_pairs_shortest(table);
    EXPECT_TRUE(std::isinf(dist(0, 2)));
    EXPECT_TRUE(std::isinf(dist(1, 2)));
    EXPECT_DOUBLE_EQ(dist(2, 2), 0.0);
}

TEST(ShortestPaths, MatchesBruteForceOnRandomGraphs) {
    std::mt19937_64 rng = testsup::rng(7101);
    std::uniform_real_distribution<double> len(0.5, 10.0);
    std::bernoulli_distribution keep(0.45);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 6;
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
        std::vector<std::tuple<int, int, double>> edges;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && keep(rng)) edges.push_back({i, j, len(rng)});
        auto table = table_from_edges(ids, edges);
        auto dist = all_pairs_shortest(table);
        Eigen::MatrixXd expect = testsup::brute_force_shortest(table);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (std::isinf(expect(i, j))) {
                    EXPECT_TRUE(std::isinf(dist(i, j))) << "trial " << trial;
                } else {
                    EXPECT_NEAR(dist(i, j), expect(i, j), 1e-12) << "trial " << trial;
                }
            }
        }
    }
}

TEST(ShortestPaths, DuplicateSensorIdThrows) {
    DistanceTable table;
    table.sensor_ids = {"a", "b", "a"};
    table.out_edges.resize(3);
    EXPECT_THROW(all_pairs_shortest(table), ConfigError);
}

TEST(SelectSensors, SubsetsAndReorders) {
    auto table = table_from_edges({"a", "b", "c"},
                                  {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}});
    auto dist = all_pairs_shortest(table);
    auto sub = select_sensors(dist, table.sensor_ids, {"c", "a"});
    ASSERT_EQ(sub.rows(), 2);
    EXPECT_DOUBLE_EQ(sub(0, 1), dist(2, 0));
    EXPECT_DOUBLE_EQ(sub(0, 0), 0.0);
    EXPECT_THROW(select_sensors(dist, table.sensor_ids, {"a", "zz"}), ConfigError);
}
