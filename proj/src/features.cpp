#include "hftnet/features.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"
#include "hftnet/stats.hpp"

namespace hftnet::features {

void FeatureConfig::validate() const {
    if (lookback < 2) throw ConfigError("lookback must be at least 2");
    if (epsilon_sigma <= 0.0) throw ConfigError("epsilon-sigma must be positive");
}

const std::vector<double>& FeatureFrame::column(int i) const {
    switch (i) {
        case 0: return roll;
        case 1: return roll_impact;
        case 2: return kyle;
        case 3: return amihud;
        case 4: return vpin;
        default: throw ConfigError("feature column index out of range");
    }
}

bool FeatureFrame::row_complete(int64_t t) const {
    const size_t i = static_cast<size_t>(t);
    return !is_missing(roll[i]) && !is_missing(roll_impact[i]) && !is_missing(kyle[i]) &&
           !is_missing(amihud[i]) && !is_missing(vpin[i]);
}

double roll_measure(std::span<const double> closes) {
    const size_t n = closes.size();  // W+1 closes -> W changes -> W-1 lag pairs
    for (double c : closes)
        if (is_missing(c)) return missing();
    const size_t w = n - 1;
    if (w < 2) return missing();
    // lag-1 covariance of the price-change series, both vectors demeaned
    double mean_cur = 0.0, mean_lag = 0.0;
    for (size_t i = 1; i < w; ++i) {
        mean_cur += closes[i + 1] - closes[i];
        mean_lag += closes[i] - closes[i - 1];
    }
    const double np = static_cast<double>(w - 1);
    mean_cur /= np;
    mean_lag /= np;
    double cov = 0.0;
    for (size_t i = 1; i < w; ++i) {
        const double dc = (closes[i + 1] - closes[i]) - mean_cur;
        const double dl = (closes[i] - closes[i - 1]) - mean_lag;
        cov += dc * dl;
    }
    cov /= np;
    return 2.0 * std::sqrt(std::fabs(cov));
}

double roll_impact(double roll, double bar_dollar_volume) {
    if (is_missing(roll) || bar_dollar_volume <= 0.0) return missing();
    return roll / bar_dollar_volume;
}

double kyle_lambda(std::span<const double> closes, std::span<const double> volumes,
                   bool* degenerate) {
    if (degenerate) *degenerate = false;
    for (double c : closes)
        if (is_missing(c)) return missing();
    const size_t n = volumes.size();  // W+1 volume terms
    double denom = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dp = closes[i + 1] - closes[i];
        const double sign = dp > 0.0 ? 1.0 : (dp < 0.0 ? -1.0 : 0.0);
        denom += sign * volumes[i];
    }
    if (denom == 0.0) {
        if (degenerate) *degenerate = true;
        return missing();
    }
    return (closes[closes.size() - 1] - closes[1]) / denom;
}

double amihud_lambda(std::span<const double> abs_returns,
                     std::span<const double> dollar_volumes) {
    const size_t w = abs_returns.size();
    double sum = 0.0;
    for (size_t i = 0; i < w; ++i) {
        if (is_missing(abs_returns[i]) || dollar_volumes[i] <= 0.0) return missing();
        sum += abs_returns[i] / dollar_volumes[i];
    }
    return sum / static_cast<double>(w);
}

double bvc_buy_volume(double delta_p, double sigma, double volume, double epsilon_sigma) {
    if (is_missing(delta_p) || is_missing(sigma)) return missing();
    return volume * stats::normal_cdf(delta_p / std::max(sigma, epsilon_sigma));
}

double vpin(std::span<const double> volumes, std::span<const double> buy_volumes) {
    const size_t w = volumes.size();
    double sum = 0.0;
    for (size_t i = 0; i < w; ++i) {
        if (volumes[i] <= 0.0 || is_missing(buy_volumes[i])) return missing();
        // |Vsell - Vbuy| = |V - 2*Vbuy|
        sum += std::fabs(volumes[i] - 2.0 * buy_volumes[i]) / volumes[i];
    }
    return sum / static_cast<double>(w);
}

double global_delta_p_sigma(std::span<const double> closes) {
    std::vector<double> changes;
    changes.reserve(closes.size());
    for (size_t i = 1; i < closes.size(); ++i)
        if (!is_missing(closes[i]) && !is_missing(closes[i - 1]))
            changes.push_back(closes[i] - closes[i - 1]);
    if (changes.size() < 2) return missing();
    return stats::sample_sd(changes);
}

namespace {

FeatureFrame compute_frame_impl(const bars::BarSeries& series, const FeatureConfig& cfg,
                                bool parallel) {
    cfg.validate();
    const int64_t n = series.size();
    const int64_t w = cfg.lookback;
    if (n <= w + 1)
        throw DataError("series '" + series.symbol + "' has " + std::to_string(n) +
                        " bars; need more than " + std::to_string(w + 1));

    FeatureFrame frame;
    frame.symbol = series.symbol;
    frame.roll.assign(static_cast<size_t>(n), missing());
    frame.roll_impact.assign(static_cast<size_t>(n), missing());
    frame.kyle.assign(static_cast<size_t>(n), missing());
    frame.amihud.assign(static_cast<size_t>(n), missing());
    frame.vpin.assign(static_cast<size_t>(n), missing());

    const std::vector<double> closes = series.closes();
    const std::vector<double> volumes = series.volumes();
    const std::vector<double> dollar_volumes = series.dollar_volumes();
    const double sigma_global = cfg.bvc_sigma_mode == FeatureConfig::SigmaMode::global
                                    ? global_delta_p_sigma(closes)
                                    : missing();

    std::vector<int64_t> degenerate_tally(static_cast<size_t>(n), 0);

#pragma omp parallel for schedule(static) if (parallel)
    for (int64_t t = w; t < n; ++t) {
        const size_t ti = static_cast<size_t>(t);
        const std::span<const double> win_closes(closes.data() + (t - w), static_cast<size_t>(w + 1));

        const double r = roll_measure(win_closes);
        frame.roll[ti] = r;
        frame.roll_impact[ti] = roll_impact(r, dollar_volumes[ti]);

        if (t >= w + 1) {
            bool degen = false;
            frame.kyle[ti] = kyle_lambda(
                std::span<const double>(closes.data() + (t - w - 1), static_cast<size_t>(w + 2)),
                std::span<const double>(volumes.data() + (t - w), static_cast<size_t>(w + 1)),
                &degen);
            if (degen) degenerate_tally[ti] = 1;
        }

        // per-bar simple returns and price changes over the window
        std::vector<double> abs_returns(static_cast<size_t>(w));
        std::vector<double> buy_volumes(static_cast<size_t>(w));
        bool returns_ok = true;
        for (int64_t j = 0; j < w; ++j) {
            const size_t tau = static_cast<size_t>(t - w + 1 + j);
            const double prev = closes[tau - 1], cur = closes[tau];
            if (is_missing(prev) || is_missing(cur) || prev == 0.0) {
                returns_ok = false;
                break;
            }
            abs_returns[static_cast<size_t>(j)] = std::fabs(cur / prev - 1.0);
        }
        if (returns_ok) {
            frame.amihud[ti] =
                amihud_lambda(abs_returns, std::span<const double>(
                                               dollar_volumes.data() + (t - w + 1),
                                               static_cast<size_t>(w)));
            double sigma = sigma_global;
            if (cfg.bvc_sigma_mode == FeatureConfig::SigmaMode::trailing) {
                std::vector<double> win_changes(static_cast<size_t>(w));
                for (int64_t j = 0; j < w; ++j) {
                    const size_t tau = static_cast<size_t>(t - w + 1 + j);
                    win_changes[static_cast<size_t>(j)] = closes[tau] - closes[tau - 1];
                }
                sigma = stats::sample_sd(win_changes);
            }
            bool bvc_ok = !is_missing(sigma);
            for (int64_t j = 0; bvc_ok && j < w; ++j) {
                const size_t tau = static_cast<size_t>(t - w + 1 + j);
                buy_volumes[static_cast<size_t>(j)] = bvc_buy_volume(
                    closes[tau] - closes[tau - 1], sigma, volumes[tau], cfg.epsilon_sigma);
            }
            if (bvc_ok)
                frame.vpin[ti] = vpin(
                    std::span<const double>(volumes.data() + (t - w + 1), static_cast<size_t>(w)),
                    buy_volumes);
        }
    }

    for (int64_t c : degenerate_tally) frame.kyle_degenerate_count += c;
    return frame;
}

}  // namespace

FeatureFrame compute_frame(const bars::BarSeries& series, const FeatureConfig& cfg) {
    return compute_frame_impl(series, cfg, true);
}

FeatureFrame compute_frame_serial(const bars::BarSeries& series, const FeatureConfig& cfg) {
    return compute_frame_impl(series, cfg, false);
}

void write_features_csv(const std::string& path, const std::vector<FeatureFrame>& frames,
                        const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"symbol", "bar_index", "roll", "roll_impact", "kyle", "amihud", "vpin"});
    auto cell = [](double x) { return is_missing(x) ? std::string() : format_double(x); };
    for (const FeatureFrame& f : frames)
        for (int64_t t = 0; t < f.size(); ++t) {
            const size_t i = static_cast<size_t>(t);
            w.row({f.symbol, std::to_string(t), cell(f.roll[i]), cell(f.roll_impact[i]),
                   cell(f.kyle[i]), cell(f.amihud[i]), cell(f.vpin[i])});
        }
    w.close();
}

std::vector<FeatureFrame> read_features_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    for (const char* col : {"symbol", "bar_index", "roll", "roll_impact", "kyle", "amihud", "vpin"})
        if (table.column(col) < 0) throw DataError(path + ": missing column " + col);
    const int c_sym = table.column("symbol");
    const int c_idx = table.column("bar_index");
    const int cols[] = {table.column("roll"), table.column("roll_impact"), table.column("kyle"),
                        table.column("amihud"), table.column("vpin")};

    std::map<std::string, std::vector<std::array<double, kFeatureCount>>> by_symbol;
    std::map<std::string, int64_t> max_index;
    for (const auto& row : table.rows) {
        const std::string& sym = row[static_cast<size_t>(c_sym)];
        const int64_t idx = std::stoll(row[static_cast<size_t>(c_idx)]);
        auto& vec = by_symbol[sym];
        if (static_cast<int64_t>(vec.size()) <= idx)
            vec.resize(static_cast<size_t>(idx + 1),
                       {missing(), missing(), missing(), missing(), missing()});
        for (int c = 0; c < kFeatureCount; ++c) {
            const std::string& cellv = row[static_cast<size_t>(cols[c])];
            vec[static_cast<size_t>(idx)][static_cast<size_t>(c)] =
                cellv.empty() ? missing() : std::stod(cellv);
        }
        max_index[sym] = std::max(max_index[sym], idx);
    }

    std::vector<FeatureFrame> out;
    for (auto& [sym, vec] : by_symbol) {
        FeatureFrame f;
        f.symbol = sym;
        const size_t n = vec.size();
        f.roll.resize(n);
        f.roll_impact.resize(n);
        f.kyle.resize(n);
        f.amihud.resize(n);
        f.vpin.resize(n);
        for (size_t i = 0; i < n; ++i) {
            f.roll[i] = vec[i][0];
            f.roll_impact[i] = vec[i][1];
            f.kyle[i] = vec[i][2];
            f.amihud[i] = vec[i][3];
            f.vpin[i] = vec[i][4];
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace hftnet::features
