#include "hftnet/measures.hpp"

#include <cmath>
#include <fstream>

#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"
#include "hftnet/stats.hpp"

#include <json.hpp>

namespace hftnet::measures {

std::string measure_name(MeasureKind kind) {
    return kind == MeasureKind::realized_volatility ? "vol" : "kurt";
}

MeasureKind parse_measure(const std::string& name) {
    if (name == "vol") return MeasureKind::realized_volatility;
    if (name == "kurt") return MeasureKind::kurtosis;
    throw ConfigError("unknown measure '" + name + "' (expected vol or kurt)");
}

double realized_volatility(std::span<const double> returns) {
    for (double r : returns)
        if (is_missing(r)) return missing();
    if (returns.size() < 2) return missing();
    return stats::sample_sd(returns);
}

double excess_kurtosis(std::span<const double> returns) {
    for (double r : returns)
        if (is_missing(r)) return missing();
    const double var = stats::population_variance(returns);
    if (var == 0.0) return missing();
    const double mu4 = stats::central_moment(returns, 4);
    return mu4 / (var * var) - 3.0;
}

MeasureSeries compute_measures(const bars::BarSeries& series, int lookback) {
    const int64_t n = series.size();
    const int64_t w = lookback;
    MeasureSeries out;
    out.symbol = series.symbol;
    out.sigma.assign(static_cast<size_t>(n), missing());
    out.kurt.assign(static_cast<size_t>(n), missing());
    if (n <= w) return out;

    const std::vector<double> closes = series.closes();
    std::vector<double> returns(static_cast<size_t>(n), missing());
    for (int64_t t = 1; t < n; ++t) {
        const double prev = closes[static_cast<size_t>(t - 1)];
        const double cur = closes[static_cast<size_t>(t)];
        if (!is_missing(prev) && !is_missing(cur) && prev != 0.0)
            returns[static_cast<size_t>(t)] = cur / prev - 1.0;
    }
    for (int64_t t = w; t < n; ++t) {
        const std::span<const double> window(returns.data() + (t - w + 1),
                                             static_cast<size_t>(w));
        out.sigma[static_cast<size_t>(t)] = realized_volatility(window);
        out.kurt[static_cast<size_t>(t)] = excess_kurtosis(window);
    }
    return out;
}

int sign_label(const std::vector<double>& m, int64_t t, int64_t h) {
    const double now = m[static_cast<size_t>(t)];
    const double later = m[static_cast<size_t>(t + h)];
    return later - now > 0.0 ? +1 : -1;
}

Dataset assemble_columns(const std::string& symbol, const std::string& cross_symbol,
                         const std::vector<std::string>& names,
                         const std::vector<const std::vector<double>*>& cols,
                         const std::vector<double>& measure, const bars::SessionGrid& grid,
                         MeasureKind kind, const AssembleConfig& cfg) {
    if (cfg.horizon < 1) throw ConfigError("horizon must be at least 1");
    const int64_t n = static_cast<int64_t>(measure.size());
    for (const auto* c : cols)
        if (static_cast<int64_t>(c->size()) != n)
            throw DataError("feature/measure series lengths differ for " + symbol);

    Dataset ds;
    ds.feature_names = names;
    ds.columns.resize(names.size());
    ds.task.target_symbol = symbol;
    ds.task.cross_symbol = cross_symbol;
    ds.task.measure = kind;
    ds.task.horizon = cfg.horizon;
    ds.task.lookback = cfg.lookback;
    ds.task.bvc_sigma_mode = cfg.bvc_sigma_mode;

    for (int64_t t = 0; t + cfg.horizon < n; ++t) {
        bool complete = !is_missing(measure[static_cast<size_t>(t)]) &&
                        !is_missing(measure[static_cast<size_t>(t + cfg.horizon)]);
        if (complete)
            for (const auto* c : cols)
                if (is_missing((*c)[static_cast<size_t>(t)])) {
                    complete = false;
                    break;
                }
        if (!complete) {
            ++ds.task.rows_dropped_missing;
            continue;
        }
        ds.bar_index.push_back(t);
        ds.timestamps.push_back(grid.bar_start(t));
        ds.labels.push_back(static_cast<int8_t>(sign_label(measure, t, cfg.horizon)));
        for (size_t c = 0; c < cols.size(); ++c)
            ds.columns[c].push_back((*cols[c])[static_cast<size_t>(t)]);
    }
    ds.task.rows_dropped_horizon = cfg.horizon;  // trailing bars with no label slot

    if (ds.n_rows() < cfg.min_rows)
        throw DataError("dataset for " + symbol + " has " + std::to_string(ds.n_rows()) +
                        " usable rows; need at least " + std::to_string(cfg.min_rows));
    return ds;
}

Dataset assemble(const features::FeatureFrame& target_features,
                 const MeasureSeries& target_measures, const bars::SessionGrid& grid,
                 const features::FeatureFrame* cross_features, MeasureKind kind,
                 const AssembleConfig& cfg) {
    if (cross_features && cross_features->symbol == target_features.symbol)
        throw ConfigError("cross firm equals target firm (" + target_features.symbol +
                          "); self-pairing duplicates columns");
    if (target_features.size() != target_measures.size())
        throw DataError("feature frame and measure series lengths differ for " +
                        target_features.symbol);
    if (cross_features && cross_features->size() != target_features.size())
        throw DataError("cross frame length differs from target for " + target_features.symbol);

    std::vector<std::string> names;
    std::vector<const std::vector<double>*> cols;
    for (int c = 0; c < features::kFeatureCount; ++c) {
        names.push_back(features::kFeatureNames[static_cast<size_t>(c)]);
        cols.push_back(&target_features.column(c));
    }
    if (cross_features)
        for (int c = 0; c < features::kFeatureCount; ++c) {
            names.push_back(features::kFeatureNames[static_cast<size_t>(c)] + ".x");
            cols.push_back(&cross_features->column(c));
        }

    Dataset ds = assemble_columns(target_features.symbol,
                                  cross_features ? cross_features->symbol : "", names, cols,
                                  target_measures.series(kind), grid, kind, cfg);
    return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& ds,
                       const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    std::vector<std::string> header = {"bar_index", "timestamp", "label"};
    for (const auto& n : ds.feature_names) header.push_back(n);
    w.row(header);
    std::vector<std::string> row;
    for (int64_t i = 0; i < ds.n_rows(); ++i) {
        row.clear();
        const size_t si = static_cast<size_t>(i);
        row.push_back(std::to_string(ds.bar_index[si]));
        row.push_back(format_timestamp(ds.timestamps[si]));
        row.push_back(std::to_string(static_cast<int>(ds.labels[si])));
        for (const auto& col : ds.columns) row.push_back(format_double(col[si]));
        w.row(row);
    }
    w.close();
}

void write_task_json(const std::string& path, const Dataset& ds) {
    nlohmann::json j;
    j["target"] = ds.task.target_symbol;
    j["cross"] = ds.task.cross_symbol;
    j["measure"] = measure_name(ds.task.measure);
    j["lookback"] = ds.task.lookback;
    j["horizon"] = ds.task.horizon;
    j["bvc_sigma_mode"] = ds.task.bvc_sigma_mode;
    j["rows"] = ds.n_rows();
    j["features"] = ds.feature_names;
    j["rows_dropped_missing"] = ds.task.rows_dropped_missing;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace hftnet::measures
