#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hftnet/features.hpp"

namespace hftnet::measures {

enum class MeasureKind { realized_volatility, kurtosis };

std::string measure_name(MeasureKind kind);          // "vol" / "kurt"
MeasureKind parse_measure(const std::string& name);  // throws ConfigError

// Per-bar market measures for one firm; missing cells are NaN and the first
// W bars are always missing.
struct MeasureSeries {
    std::string symbol;
    std::vector<double> sigma;  // realized volatility
    std::vector<double> kurt;   // excess kurtosis

    int64_t size() const { return static_cast<int64_t>(sigma.size()); }
    const std::vector<double>& series(MeasureKind kind) const {
        return kind == MeasureKind::realized_volatility ? sigma : kurt;
    }
};

// sample standard deviation of the return window (n-1 denominator)
double realized_volatility(std::span<const double> returns);

// mu4/sigma^4 - 3 with population moments (both divide by W); missing when
// the window variance is 0
double excess_kurtosis(std::span<const double> returns);

MeasureSeries compute_measures(const bars::BarSeries& series, int lookback);

// +1 if m[t+h] > m[t], else -1 (a zero change counts as "did not increase");
// both endpoints must be present
int sign_label(const std::vector<double>& m, int64_t t, int64_t h);

struct TaskDescriptor {
    std::string target_symbol;
    std::string cross_symbol;  // empty = own-features model
    MeasureKind measure = MeasureKind::realized_volatility;
    int lookback = 50;
    int64_t horizon = 50;
    std::string bvc_sigma_mode = "global";
    int64_t rows_dropped_missing = 0;   // bars lost to incomplete cells
    int64_t rows_dropped_horizon = 0;   // bars whose label slot falls off the series
};

// Feature matrix + labels for one prediction task. Columnar storage: one
// vector per feature, rows aligned with bar_index/timestamps/labels.
struct Dataset {
    std::vector<int64_t> bar_index;
    std::vector<TimestampNs> timestamps;
    std::vector<int8_t> labels;  // -1 / +1
    std::vector<std::vector<double>> columns;
    std::vector<std::string> feature_names;
    TaskDescriptor task;

    int64_t n_rows() const { return static_cast<int64_t>(labels.size()); }
    int n_features() const { return static_cast<int>(columns.size()); }
};

struct AssembleConfig {
    int64_t horizon = 50;
    int64_t min_rows = 200;
    // echoed into the task descriptor; assemble itself never windows anything
    int lookback = 50;
    std::string bvc_sigma_mode = "global";
};

// One row per bar t where every feature at t and the label at t+h exist.
// Cross columns are the cross firm's five features, names suffixed ".x".
// Rejects self-pairing and datasets below min_rows.
Dataset assemble(const features::FeatureFrame& target_features,
                 const MeasureSeries& target_measures, const bars::SessionGrid& grid,
                 const features::FeatureFrame* cross_features, MeasureKind kind,
                 const AssembleConfig& cfg);

// Generic variant used for aggregate (size-group) firms with an arbitrary
// feature set: columns[i][t] aligned on the grid, NaN = missing.
Dataset assemble_columns(const std::string& symbol, const std::string& cross_symbol,
                         const std::vector<std::string>& names,
                         const std::vector<const std::vector<double>*>& cols,
                         const std::vector<double>& measure, const bars::SessionGrid& grid,
                         MeasureKind kind, const AssembleConfig& cfg);

// Dataset CSV (`bar_index,timestamp,label,<features>`) + JSON sidecar with the
// task descriptor.
void write_dataset_csv(const std::string& path, const Dataset& ds,
                       const std::string& manifest_id = "");
void write_task_json(const std::string& path, const Dataset& ds);

}  // namespace hftnet::measures
