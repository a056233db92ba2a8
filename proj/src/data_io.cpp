#include "cegncde/data_io.hpp"

#include "cegncde/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace cegncde {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    return s.substr(b);
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(strip(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(strip(cur));
    return cells;
}

double parse_cell(const std::string& cell, const std::string& where) {
    if (cell.empty()) return kNaN;
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw DataError(where + ": non-numeric cell '" + cell + "'");
    return v;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

CsvTable read_csv_table(const std::string& path, bool first_column_is_label) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
    table.header = split_cells(strip(line));
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        auto cells = split_cells(strip(line));
        if (cells.size() != table.header.size()) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                            " cells, got " + std::to_string(cells.size()));
        }
        const std::string where = path + ":" + std::to_string(lineno);
        std::vector<double> row;
        std::size_t start = 0;
        if (first_column_is_label) {
            table.first_column.push_back(cells[0]);
            start = 1;
        }
        for (std::size_t k = start; k < cells.size(); ++k) row.push_back(parse_cell(cells[k], where));
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::string>& labels, const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        bool first = true;
        if (!labels.empty()) {
            out << labels[r];
            first = false;
        }
        for (double v : rows[r]) {
            if (!first) out << ',';
            out << format_double(v);
            first = false;
        }
        out << '\n';
    }
}

RawDataset load_dataset(const std::string& sidecar_path) {
    std::ifstream in(sidecar_path);
    if (!in) throw DataError("cannot open dataset sidecar '" + sidecar_path + "'");
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw DataError(sidecar_path + ": invalid JSON (" + e.what() + ")");
    }
    RawDataset data;
    try {
        data.interval_minutes = meta.at("interval_minutes").get<int>();
        data.channels = meta.at("channels").get<std::vector<std::string>>();
        data.start_time = meta.value("start_time", std::string());
    } catch (const json::exception& e) {
        throw DataError(sidecar_path + ": " + e.what());
    }
    if (data.channels.empty()) throw DataError(sidecar_path + ": no channels listed");
    if (data.interval_minutes < 1) throw DataError(sidecar_path + ": interval_minutes must be >= 1");

    const fs::path dir = fs::path(sidecar_path).parent_path();
    std::vector<CsvTable> tables;
    for (const auto& ch : data.channels) {
        const std::string file = (dir / (ch + ".csv")).string();
        CsvTable t = read_csv_table(file, true);
        if (t.header.size() < 2 || t.header[0] != "time") {
            throw DataError(file + ": malformed header, expected 'time,<node_0>,...'");
        }
        std::vector<std::string> names(t.header.begin() + 1, t.header.end());
        if (tables.empty()) {
            data.node_names = names;
        } else if (names != data.node_names || t.rows.size() != tables.front().rows.size()) {
            throw DataError(file + ": nodes or row count differ from channel '" + data.channels.front() + "'");
        }
        tables.push_back(std::move(t));
    }

    const int steps = static_cast<int>(tables.front().rows.size());
    const int nodes = static_cast<int>(data.node_names.size());
    data.values = Tensor3(steps, nodes, static_cast<int>(data.channels.size()));
    for (std::size_t c = 0; c < tables.size(); ++c)
        for (int t = 0; t < steps; ++t)
            for (int n = 0; n < nodes; ++n) data.values(t, n, static_cast<int>(c)) = tables[c].rows[t][n];
    return data;
}

std::string write_dataset(const RawDataset& data, const std::string& dir) {
    fs::create_directories(dir);
    if (static_cast<int>(data.channels.size()) != data.values.channels()) {
        throw ShapeError("write_dataset: channel names do not match tensor");
    }
    std::vector<std::string> header{"time"};
    for (int n = 0; n < data.nodes(); ++n) {
        header.push_back(n < static_cast<int>(data.node_names.size()) ? data.node_names[n] : "node_" + std::to_string(n));
    }
    std::vector<std::string> labels;
    for (int t = 0; t < data.steps(); ++t) labels.push_back(std::to_string(t));
    for (int c = 0; c < data.values.channels(); ++c) {
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(data.steps()));
        for (int t = 0; t < data.steps(); ++t)
            for (int n = 0; n < data.nodes(); ++n) rows[t].push_back(data.values(t, n, c));
        write_csv_table((fs::path(dir) / (data.channels[c] + ".csv")).string(), header, labels, rows);
    }
    json meta{{"interval_minutes", data.interval_minutes}, {"channels", data.channels}, {"start_time", data.start_time}};
    const std::string sidecar = (fs::path(dir) / "data.json").string();
    std::ofstream out(sidecar, std::ios::binary);
    out << meta.dump(2) << '\n';
    return sidecar;
}

Tensor3 missing_mask(const Tensor3& values) {
    Tensor3 m(values.steps(), values.nodes(), values.channels());
    for (std::size_t k = 0; k < values.size(); ++k) m.data()[k] = std::isnan(values.data()[k]) ? 1.0 : 0.0;
    return m;
}

RawDataset fill_missing(const RawDataset& raw) {
    RawDataset out = raw;
    Tensor3& v = out.values;
    for (int n = 0; n < v.nodes(); ++n) {
        for (int c = 0; c < v.channels(); ++c) {
            int prev = -1;
            for (int t = 0; t < v.steps(); ++t) {
                if (std::isnan(v(t, n, c))) continue;
                if (prev < 0) {
                    for (int s = 0; s < t; ++s) v(s, n, c) = v(t, n, c);
                } else if (t - prev > 1) {
                    const double a = v(prev, n, c);
                    const double b = v(t, n, c);
                    for (int s = prev + 1; s < t; ++s) v(s, n, c) = a + (b - a) * (s - prev) / (t - prev);
                }
                prev = t;
            }
            if (prev < 0) {
                throw DataError("fill_missing: node " + std::to_string(n) + " channel " + std::to_string(c) +
                                " has no observations");
            }
            for (int s = prev + 1; s < v.steps(); ++s) v(s, n, c) = v(prev, n, c);
        }
    }
    return out;
}

RawDataset aggregate(const RawDataset& raw, int target_interval_minutes) {
    if (target_interval_minutes < raw.interval_minutes || target_interval_minutes % raw.interval_minutes != 0) {
        throw DataError("aggregate: target interval " + std::to_string(target_interval_minutes) +
                        " min is not a multiple of source interval " + std::to_string(raw.interval_minutes) + " min");
    }
    const int factor = target_interval_minutes / raw.interval_minutes;
    RawDataset out = raw;
    out.interval_minutes = target_interval_minutes;
    const int steps = raw.steps() / factor;
    out.values = Tensor3(steps, raw.nodes(), raw.values.channels());
    for (int t = 0; t < steps; ++t)
        for (int n = 0; n < raw.nodes(); ++n)
            for (int c = 0; c < raw.values.channels(); ++c) {
                double sum = 0.0;
                int count = 0;
                for (int k = 0; k < factor; ++k) {
                    const double x = raw.values(t * factor + k, n, c);
                    if (!std::isnan(x)) {
                        sum += x;
                        ++count;
                    }
                }
                out.values(t, n, c) = count ? sum / count : kNaN;
            }
    return out;
}

std::array<StepRange, 3> split_ranges(int total_steps, const std::array<double, 3>& ratios) {
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    const int first = static_cast<int>(std::lround(total_steps * ratios[0]));
    const int second = static_cast<int>(std::lround(total_steps * (ratios[0] + ratios[1])));
    return {StepRange{0, first}, StepRange{first, second}, StepRange{second, total_steps}};
}

std::array<SeriesSegment, 3> split(const Tensor3& values, const Tensor3& missing, const std::array<double, 3>& ratios,
                                   int window, int horizon) {
    const auto ranges = split_ranges(values.steps(), ratios);
    static const char* names[] = {"train", "validation", "test"};
    std::array<SeriesSegment, 3> out;
    for (int k = 0; k < 3; ++k) {
        const StepRange r = ranges[k];
        if (window_count(r.length(), window, horizon) == 0) {
            throw DataError(std::string(names[k]) + " split has " + std::to_string(r.length()) +
                            " steps, fewer than one window of " + std::to_string(window + horizon));
        }
        out[k] = SeriesSegment{values.slice(r.begin, r.end), missing.slice(r.begin, r.end), r.begin};
    }
    return out;
}

WindowSet::WindowSet(SeriesSegment segment, int window, int horizon)
    : segment_(std::move(segment)), window_(window), horizon_(horizon) {
    if (window < 1 || horizon < 1) throw ConfigError("window and horizon must be >= 1");
}

WindowedSample WindowSet::operator[](std::size_t i) const {
    if (i >= size()) throw std::out_of_range("WindowSet index " + std::to_string(i));
    const int t = static_cast<int>(i);
    return {segment_.values.slice(t, t + window_), segment_.values.slice(t + window_, t + window_ + horizon_),
            segment_.missing.slice(t + window_, t + window_ + horizon_)};
}

Tensor3 read_window_csv(const std::string& path, int nodes, int channels) {
    const CsvTable t = read_csv_table(path, true);
    if (static_cast<int>(t.header.size()) != 1 + nodes * channels) {
        throw ShapeError(path + ": expected " + std::to_string(nodes * channels) + " value columns (N = " +
                         std::to_string(nodes) + "), got " + std::to_string(t.header.size() - 1));
    }
    Tensor3 out(static_cast<int>(t.rows.size()), nodes, channels);
    for (int s = 0; s < out.steps(); ++s)
        for (int n = 0; n < nodes; ++n)
            for (int c = 0; c < channels; ++c) {
                const double v = t.rows[s][n * channels + c];
                if (std::isnan(v)) throw DataError(path + ": missing value in input window row " + std::to_string(s));
                out(s, n, c) = v;
            }
    return out;
}

void write_horizon_csv(const std::string& path, const Tensor3& values, const std::vector<std::string>& node_names) {
    std::vector<std::string> header{"horizon"};
    for (int n = 0; n < values.nodes(); ++n) {
        const std::string name =
            n < static_cast<int>(node_names.size()) ? node_names[n] : "node_" + std::to_string(n);
        for (int c = 0; c < values.channels(); ++c) {
            header.push_back(values.channels() == 1 ? name : name + ":" + std::to_string(c));
        }
    }
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    for (int h = 0; h < values.steps(); ++h) {
        labels.push_back(std::to_string(h + 1));
        std::vector<double> row;
        for (int n = 0; n < values.nodes(); ++n)
            for (int c = 0; c < values.channels(); ++c) row.push_back(values(h, n, c));
        rows.push_back(std::move(row));
    }
    write_csv_table(path, header, labels, rows);
}

}  // namespace cegncde
