#pragma once

// Dataset ingestion, cleaning, aggregation, chronological splits, and
// sliding windows.
//
// On-disk layout: a JSON sidecar {interval_minutes, channels, start_time}
// next to one CSV per channel named <channel>.csv. Each CSV starts with the
// header `time,<node_0>,<node_1>,...`; an empty cell marks a missing value.

#include "cegncde/tensor.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace cegncde {

struct RawDataset {
    Tensor3 values;                       // [T_total x N x C], NaN where missing
    int interval_minutes = 5;
    std::vector<std::string> channels;
    std::vector<std::string> node_names;
    std::string start_time;

    int steps() const { return values.steps(); }
    int nodes() const { return values.nodes(); }
};

RawDataset load_dataset(const std::string& sidecar_path);
// Writes <dir>/data.json and one CSV per channel; returns the sidecar path.
std::string write_dataset(const RawDataset& data, const std::string& dir);

// 1.0 where the value is NaN, else 0.0.
Tensor3 missing_mask(const Tensor3& values);

// Interior NaN runs are linearly interpolated; leading/trailing runs take the
// nearest observed value. Throws DataError for a series with no observations.
RawDataset fill_missing(const RawDataset& raw);

// NaN-aware bucket means; the target must be a multiple of the source interval.
RawDataset aggregate(const RawDataset& raw, int target_interval_minutes);

// A contiguous run of filled values plus where they were originally missing.
struct SeriesSegment {
    Tensor3 values;
    Tensor3 missing;
    int offset = 0;  // first step within the full series
};

struct StepRange {
    int begin = 0;
    int end = 0;
    int length() const { return end - begin; }
};

// Segment boundaries for chronological ratios (must sum to 1).
std::array<StepRange, 3> split_ranges(int total_steps, const std::array<double, 3>& ratios);

// Splits into train/validation/test; throws DataError when any segment cannot
// hold one window of `window + horizon` steps.
std::array<SeriesSegment, 3> split(const Tensor3& values, const Tensor3& missing, const std::array<double, 3>& ratios,
                                   int window, int horizon);

inline std::size_t window_count(int length, int window, int horizon) {
    const int n = length - window - horizon + 1;
    return n > 0 ? static_cast<std::size_t>(n) : 0;
}

struct WindowedSample {
    Tensor3 input;           // [T x N x C]
    Tensor3 target;          // [T' x N x C]
    Tensor3 target_missing;  // [T' x N x C], 1.0 where missing
};

// Stride-1 windows over one segment, materialized on demand.
class WindowSet {
public:
    WindowSet() = default;
    WindowSet(SeriesSegment segment, int window, int horizon);

    std::size_t size() const { return window_count(segment_.values.steps(), window_, horizon_); }
    bool empty() const { return size() == 0; }
    WindowedSample operator[](std::size_t i) const;
    int window() const { return window_; }
    int horizon() const { return horizon_; }
    const SeriesSegment& segment() const { return segment_; }

private:
    SeriesSegment segment_;
    int window_ = 0;
    int horizon_ = 0;
};

// Simple CSV matrix: a header row and numeric rows (empty cell -> NaN).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> first_column;  // raw text of column 0 per row
};

CsvTable read_csv_table(const std::string& path, bool first_column_is_label);
void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::string>& labels, const std::vector<std::vector<double>>& rows);

// Window CSV: header `time,<col>...` with one row per step and N*C value
// columns ordered node-major (column 1 + n*C + c).
Tensor3 read_window_csv(const std::string& path, int nodes, int channels);
void write_horizon_csv(const std::string& path, const Tensor3& values, const std::vector<std::string>& node_names);

// Shortest decimal form that round-trips a double.
std::string format_double(double v);

}  // namespace cegncde
