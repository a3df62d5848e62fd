#pragma once

#include <Eigen/Dense>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"

namespace gdlm {

/// Directed travel distances between named sensors.
struct DistanceTable {
    std::vector<std::string> sensor_ids;                    // first-appearance order
    std::vector<std::vector<std::pair<int, double>>> out_edges;  // out_edges[i] = {(j, dist)}

    int index_of(const std::string& id) const {
        for (int i = 0; i < static_cast<int>(sensor_ids.size()); ++i)
            if (sensor_ids[i] == id) return i;
        return -1;
    }
};

/// Reads a directed edge list `from,to,distance` (one edge per row).
inline DistanceTable load_distances(const std::string& path) {
    auto in = open_text_file(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() != 3 || header[0] != "from" || header[1] != "to" || header[2] != "distance")
        throw IoError(path + ": expected header 'from,to,distance'");

    DistanceTable tab;
    std::unordered_map<std::string, int> index;
    auto intern = [&](const std::string& id) {
        auto it = index.find(id);
        if (it != index.end()) return it->second;
        int i = static_cast<int>(tab.sensor_ids.size());
        index.emplace(id, i);
        tab.sensor_ids.push_back(id);
        tab.out_edges.emplace_back();
        return i;
    };

    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 3)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected 3 columns, got " +
                          std::to_string(cells.size()));
        int i = intern(cells[0]);
        int j = intern(cells[1]);
        double d = parse_double(cells[2], path + ":" + std::to_string(line_no) + " distance");
        if (d < 0.0)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": negative distance " + cells[2]);
        if (i == j) {
            if (d != 0.0)
                throw ConfigError(path + ":" + std::to_string(line_no) + ": nonzero self distance for sensor " + cells[0]);
            continue;
        }
        tab.out_edges[i].emplace_back(j, d);
    }
    return tab;
}

/// Dijkstra shortest paths from every node over the directed edge list, then
/// symmetrized: result(i,j) = min(shortest(i->j), shortest(j->i)). Pairs
/// unreachable in both directions get +inf; the diagonal is 0.
inline Eigen::MatrixXd all_pairs_shortest(const DistanceTable& tab) {
    const int n = static_cast<int>(tab.sensor_ids.size());
    {
        std::unordered_set<std::string> seen;
        for (const auto& id : tab.sensor_ids)
            if (!seen.insert(id).second)
                throw ConfigError("duplicate sensor id '" + id + "' in distance table");
    }
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd directed = Eigen::MatrixXd::Constant(n, n, inf);

    std::vector<double> dist(n);
    using Item = std::pair<double, int>;
    for (int src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), inf);
        dist[src] = 0.0;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        pq.emplace(0.0, src);
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            for (auto [v, w] : tab.out_edges[u]) {
                double nd = d + w;
                if (nd < dist[v]) {
                    dist[v] = nd;
                    pq.emplace(nd, v);
                }
            }
        }
        for (int j = 0; j < n; ++j) directed(src, j) = dist[j];
    }

    Eigen::MatrixXd sym = directed.cwiseMin(directed.transpose());
    sym.diagonal().setZero();
    return sym;
}

/// Reorders a dense distance matrix onto `want_ids`, which must all appear in
/// `table_ids`. Used to align the graph with the sensor order of a speed file.
inline Eigen::MatrixXd select_sensors(const Eigen::MatrixXd& distM,
                                      const std::vector<std::string>& table_ids,
                                      const std::vector<std::string>& want_ids) {
    std::unordered_map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(table_ids.size()); ++i) index.emplace(table_ids[i], i);
    std::vector<int> sel;
    sel.reserve(want_ids.size());
    std::string missing;
    for (const auto& id : want_ids) {
        auto it = index.find(id);
        if (it == index.end()) {
            if (!missing.empty()) missing += ", ";
            missing += id;
        } else {
            sel.push_back(it->second);
        }
    }
    if (!missing.empty())
        throw ConfigError("sensors absent from distance table: " + missing);
    const int n = static_cast<int>(sel.size());
    Eigen::MatrixXd out(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out(r, c) = distM(sel[r], sel[c]);
    return out;
}

} // namespace gdlm
