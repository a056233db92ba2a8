#include "cegncde/masks.hpp"

#include "cegncde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace cegncde {

MaskMatrix MaskMatrix::all_ones(int nodes, MaskKind kind) { return {Mat::Ones(nodes, nodes), kind}; }

MaskMatrix geographic_mask(const DistanceTable& table, double threshold, int nodes) {
    if (!(threshold > 0.0)) throw ConfigError("geographic_mask: threshold must be > 0");
    MaskMatrix m{Mat::Identity(nodes, nodes), MaskKind::geographic};
    for (const auto& e : table) {
        if (e.from < 0 || e.from >= nodes || e.to < 0 || e.to >= nodes) {
            throw DataError("geographic_mask: node pair (" + std::to_string(e.from) + ", " + std::to_string(e.to) +
                            ") out of range for " + std::to_string(nodes) + " nodes");
        }
        if (!(e.distance >= 0.0)) {
            throw DataError("geographic_mask: negative distance for pair (" + std::to_string(e.from) + ", " +
                            std::to_string(e.to) + ")");
        }
        if (e.distance < threshold) m.values(e.from, e.to) = 1.0;
    }
    return m;
}

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw DataError("dtw_distance: empty sequence");
    const std::size_t m = b.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            cur[j] = std::abs(a[i - 1] - b[j - 1]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

std::vector<double> downsample_mean(const std::vector<double>& x, std::size_t max_points) {
    if (max_points == 0) throw ConfigError("downsample_mean: max_points must be > 0");
    if (x.size() <= max_points) return x;
    const std::size_t bucket = (x.size() + max_points - 1) / max_points;
    std::vector<double> out;
    for (std::size_t begin = 0; begin < x.size(); begin += bucket) {
        const std::size_t end = std::min(x.size(), begin + bucket);
        out.push_back(std::accumulate(x.begin() + begin, x.begin() + end, 0.0) / static_cast<double>(end - begin));
    }
    return out;
}

MaskMatrix semantic_mask(const Tensor3& series, int k, std::size_t max_points, int threads) {
    const int n = series.nodes();
    if (k < 1 || k >= n) {
        throw ConfigError("semantic_mask: K must satisfy 1 <= K < N (K = " + std::to_string(k) +
                          ", N = " + std::to_string(n) + ")");
    }
    std::vector<std::vector<double>> seq(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<double> raw(static_cast<std::size_t>(series.steps()));
        for (int t = 0; t < series.steps(); ++t) raw[t] = series(t, i, 0);
        seq[i] = downsample_mean(raw, max_points);
    }

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    Mat dist = Mat::Zero(n, n);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t p = first; p < pairs.size(); p += stride) {
            const auto [i, j] = pairs[p];
            const double d = dtw_distance(seq[i], seq[j]);
            dist(i, j) = d;
            dist(j, i) = d;
        }
    };
    const std::size_t workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
        for (auto& th : pool) th.join();
    }

    MaskMatrix mask{Mat::Identity(n, n), MaskKind::semantic};
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order.clear();
        for (int j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return dist(i, x) < dist(i, y); });
        for (int r = 0; r < k; ++r) mask.values(i, order[r]) = 1.0;
    }
    return mask;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
}

}  // namespace

DistanceTable read_distance_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open distance table '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "from,to,cost") {
        throw DataError(path + ": expected header 'from,to,cost'");
    }
    DistanceTable table;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 3) throw DataError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
        try {
            DistanceEntry e;
            std::size_t used = 0;
            e.from = std::stoi(cells[0], &used);
            if (used != trim(cells[0]).size()) throw std::invalid_argument("from");
            e.to = std::stoi(cells[1], &used);
            if (used != trim(cells[1]).size()) throw std::invalid_argument("to");
            e.distance = std::stod(cells[2], &used);
            if (used != trim(cells[2]).size()) throw std::invalid_argument("cost");
            table.push_back(e);
        } catch (const std::logic_error&) {
            throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric field");
        }
    }
    return table;
}

void write_mask_csv(const MaskMatrix& mask, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write mask file '" + path + "'");
    for (Eigen::Index i = 0; i < mask.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.values.cols(); ++j) {
            if (j) out << ',';
            out << (mask.values(i, j) != 0.0 ? 1 : 0);
        }
        out << '\n';
    }
}

MaskMatrix read_mask_csv(const std::string& path, MaskKind kind) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mask file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : split_csv_line(line)) {
            const std::string v = trim(cell);
            if (v != "0" && v != "1") throw DataError(path + ": mask entries must be 0 or 1");
            row.push_back(v == "1" ? 1.0 : 0.0);
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    MaskMatrix m{Mat::Zero(n, n), kind};
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != n) throw DataError(path + ": mask is not square");
        for (Eigen::Index j = 0; j < n; ++j) m.values(i, j) = rows[i][j];
        if (m.values(i, i) != 1.0) throw DataError(path + ": mask diagonal must be 1");
    }
    return m;
}

}  // namespace cegncde
