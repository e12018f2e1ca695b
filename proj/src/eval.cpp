#include "hftnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"
#include "hftnet/rng.hpp"
#include "hftnet/stats.hpp"

namespace hftnet::eval {

namespace {

void check_scored(std::span<const double> scores, std::span<const int8_t> labels) {
    if (scores.size() != labels.size())
        throw DataError("roc: scores and labels differ in length");
    if (scores.empty()) throw DataError("roc: empty input");
    for (double s : scores)
        if (!std::isfinite(s)) throw DataError("roc: non-finite score");
}

}  // namespace

double auc_rank(std::span<const double> scores, std::span<const int8_t> labels) {
    check_scored(scores, labels);
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_pos = 0.0;
    int64_t n_pos = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (size_t k = i; k < j; ++k) {
            if (labels[order[k]] > 0) {
                rank_pos += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    const int64_t n_neg = static_cast<int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("roc: both classes required to compute AUC");
    const double np = static_cast<double>(n_pos);
    return (rank_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<double> rank_unit_scores(std::span<const double> scores) {
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    std::vector<double> out(n);
    const double scale = 1.0 / (static_cast<double>(n) + 1.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (size_t k = i; k < j; ++k) out[order[k]] = midrank * scale;
        i = j;
    }
    return out;
}

RocResult roc_auc(std::span<const double> scores, std::span<const int8_t> labels) {
    check_scored(scores, labels);
    RocResult out;
    const size_t n = scores.size();
    for (int8_t l : labels) (l > 0 ? out.n_pos : out.n_neg)++;
    if (out.n_pos == 0 || out.n_neg == 0)
        throw DataError("roc: both classes required to compute AUC");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    out.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    int64_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < n) {  // one point per distinct score; ties become one segment
        const double s = scores[order[i]];
        while (i < n && scores[order[i]] == s) {
            (labels[order[i]] > 0 ? tp : fp)++;
            ++i;
        }
        out.points.push_back({static_cast<double>(fp) / static_cast<double>(out.n_neg),
                              static_cast<double>(tp) / static_cast<double>(out.n_pos), s});
    }
    out.auc = trapezoid_area(out.points);
    return out;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (size_t i = 1; i < points.size(); ++i)
        area += 0.5 * (points[i].tpr + points[i - 1].tpr) * (points[i].fpr - points[i - 1].fpr);
    return area;
}

void write_roc_csv(const std::string& path, const RocResult& roc,
                   const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"fpr", "tpr", "threshold"});
    for (const RocPoint& p : roc.points)
        w.row({format_double(p.fpr), format_double(p.tpr), format_double(p.threshold)});
}

namespace {

AucTestResult bootstrap_auc_test_impl(std::span<const double> p1, std::span<const double> p2,
                                      std::span<const int8_t> labels, const BootstrapConfig& cfg,
                                      bool parallel) {
    if (p1.size() != labels.size() || p2.size() != labels.size())
        throw DataError("auc test: prediction and label lengths differ");
    if (cfg.b < 2) throw ConfigError("auc test: need at least 2 bootstrap replicates");

    AucTestResult out;
    out.b = cfg.b;
    out.seed = cfg.seed;
    out.auc1 = auc_rank(p1, labels);
    out.auc2 = auc_rank(p2, labels);
    out.diff = out.auc2 - out.auc1;

    const size_t n = labels.size();
    std::vector<double> diffs(static_cast<size_t>(cfg.b));
    std::vector<int> failed(static_cast<size_t>(cfg.b), 0);

#pragma omp parallel for schedule(static) if (parallel)
    for (int b = 0; b < cfg.b; ++b) {
        Rng rng = Rng::stream(cfg.seed, static_cast<uint64_t>(b));
        std::vector<size_t> idx(n);
        std::vector<double> b1(n), b2(n);
        std::vector<int8_t> bl(n);
        bool ok = false;
        for (int attempt = 0; attempt <= cfg.max_retries && !ok; ++attempt) {
            bool has_pos = false, has_neg = false;
            for (size_t i = 0; i < n; ++i) {
                idx[i] = static_cast<size_t>(rng.below(n));
                (labels[idx[i]] > 0 ? has_pos : has_neg) = true;
            }
            if (!(has_pos && has_neg)) continue;  // redraw from the same stream
            for (size_t i = 0; i < n; ++i) {
                b1[i] = p1[idx[i]];
                b2[i] = p2[idx[i]];
                bl[i] = labels[idx[i]];
            }
            diffs[static_cast<size_t>(b)] = auc_rank(b2, bl) - auc_rank(b1, bl);
            ok = true;
        }
        if (!ok) failed[static_cast<size_t>(b)] = 1;
    }

    for (int b = 0; b < cfg.b; ++b)
        if (failed[static_cast<size_t>(b)])
            throw DataError("auc test: replicate " + std::to_string(b) +
                            " stayed single-class after " + std::to_string(cfg.max_retries) +
                            " redraws");

    out.s = stats::sample_sd(diffs);
    if (out.s == 0.0) {
        out.degenerate_s = true;
        out.d_stat = out.diff > 0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
        out.p_value = out.diff > 0 ? 0.0 : 1.0;
        return out;
    }
    out.d_stat = out.diff / out.s;
    out.p_value = 1.0 - stats::normal_cdf(out.d_stat);
    return out;
}

}  // namespace

AucTestResult bootstrap_auc_test(std::span<const double> p1, std::span<const double> p2,
                                 std::span<const int8_t> labels, const BootstrapConfig& cfg) {
    return bootstrap_auc_test_impl(p1, p2, labels, cfg, true);
}

AucTestResult bootstrap_auc_test_serial(std::span<const double> p1, std::span<const double> p2,
                                        std::span<const int8_t> labels,
                                        const BootstrapConfig& cfg) {
    return bootstrap_auc_test_impl(p1, p2, labels, cfg, false);
}

SplitSpec SplitSpec::parse(const std::string& text) {
    SplitSpec spec;
    const size_t colon = text.find(':');
    const std::string mode = text.substr(0, colon);
    if (mode == "purged")
        spec.mode = SplitMode::purged_cv;
    else if (mode == "chrono")
        spec.mode = SplitMode::chronological;
    else
        throw ConfigError("split: unknown mode '" + mode + "' (want purged or chrono)");

    if (colon != std::string::npos) {
        std::stringstream rest(text.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            const size_t eq = item.find('=');
            if (eq == std::string::npos)
                throw ConfigError("split: expected key=value, got '" + item + "'");
            const std::string key = item.substr(0, eq);
            const std::string val = item.substr(eq + 1);
            try {
                if (key == "G") {
                    spec.g = std::stoi(val);
                } else if (key == "frac") {
                    spec.train_fraction = std::stod(val);
                } else if (key == "purge") {
                    if (val.empty() || val.back() != 'd')
                        throw ConfigError("split: purge wants a day count like 5d");
                    spec.purge_ns = std::stoll(val.substr(0, val.size() - 1)) * kNsPerDay;
                } else {
                    throw ConfigError("split: unknown key '" + key + "'");
                }
            } catch (const std::invalid_argument&) {
                throw ConfigError("split: bad value '" + val + "' for " + key);
            } catch (const std::out_of_range&) {
                throw ConfigError("split: bad value '" + val + "' for " + key);
            }
        }
    }
    if (spec.mode == SplitMode::purged_cv && spec.g < 2)
        throw ConfigError("split: purged mode needs G >= 2");
    if (spec.mode == SplitMode::chronological &&
        !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("split: frac must lie in (0,1)");
    if (spec.purge_ns < 0) throw ConfigError("split: purge must be nonnegative");
    return spec;
}

std::string SplitSpec::describe() const {
    char buf[96];
    const long long days = purge_ns / kNsPerDay;
    if (mode == SplitMode::purged_cv)
        std::snprintf(buf, sizeof buf, "purged:G=%d,purge=%lldd", g, days);
    else
        std::snprintf(buf, sizeof buf, "chrono:frac=%s,purge=%lldd",
                      format_double(train_fraction).c_str(), days);
    return buf;
}

namespace {

void check_sorted(std::span<const TimestampNs> timestamps) {
    if (timestamps.size() < 2) throw DataError("split: need at least 2 rows");
    for (size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] < timestamps[i - 1])
            throw DataError("split: timestamps must be sorted ascending");
}

// test = rows in [test_start, test_end); train = rows outside the
// purge-widened window [test_start - purge, test_end + purge)
void fill_fold(Fold& fold, std::span<const TimestampNs> timestamps, int64_t purge_ns) {
    for (size_t i = 0; i < timestamps.size(); ++i) {
        const TimestampNs t = timestamps[i];
        if (t >= fold.test_start && t < fold.test_end)
            fold.test.push_back(i);
        else if (t < fold.test_start - purge_ns || t >= fold.test_end + purge_ns)
            fold.train.push_back(i);
    }
}

SplitPlan splits_over_span(std::span<const TimestampNs> timestamps, const SplitSpec& spec,
                           TimestampNs span_start, TimestampNs span_end) {
    check_sorted(timestamps);
    if (span_end <= span_start) throw DataError("split: empty time span");
    SplitPlan plan;
    plan.spec = spec;
    const TimestampNs span = span_end - span_start;

    if (spec.mode == SplitMode::purged_cv) {
        for (int i = 0; i < spec.g; ++i) {
            Fold fold;
            fold.test_start = span_start + span * i / spec.g;
            fold.test_end = span_start + span * (i + 1) / spec.g;
            fill_fold(fold, timestamps, spec.purge_ns);
            if (fold.test.empty())
                throw DataError("split: fold " + std::to_string(i) + " has no test rows");
            if (fold.train.empty())
                throw DataError("split: fold " + std::to_string(i) + " has no train rows");
            plan.folds.push_back(std::move(fold));
        }
    } else {
        Fold fold;
        fold.test_start =
            span_start + static_cast<TimestampNs>(static_cast<double>(span) * spec.train_fraction);
        fold.test_end = span_end;
        fill_fold(fold, timestamps, spec.purge_ns);
        if (fold.test.empty()) throw DataError("split: fold 0 has no test rows");
        if (fold.train.empty())
            throw DataError("split: fold 0 has no train rows after the purge");
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

}  // namespace

SplitPlan make_splits(std::span<const TimestampNs> timestamps, const SplitSpec& spec) {
    check_sorted(timestamps);
    if (spec.mode == SplitMode::purged_cv)
        return splits_over_span(timestamps, spec, timestamps.front(), timestamps.back() + 1);

    // chronological on a bare dataset cuts by row count, not by clock time
    const size_t n = timestamps.size();
    const size_t cutoff =
        static_cast<size_t>(std::floor(static_cast<double>(n) * spec.train_fraction));
    if (cutoff == 0 || cutoff >= n)
        throw DataError("split: train fraction leaves an empty side");
    SplitPlan plan;
    plan.spec = spec;
    Fold fold;
    fold.test_start = timestamps[cutoff];
    fold.test_end = timestamps.back() + 1;
    fill_fold(fold, timestamps, spec.purge_ns);
    if (fold.test.empty()) throw DataError("split: fold 0 has no test rows");
    if (fold.train.empty())
        throw DataError("split: fold 0 has no train rows after the purge");
    plan.folds.push_back(std::move(fold));
    return plan;
}

SplitPlan make_splits(std::span<const TimestampNs> timestamps, const SplitSpec& spec,
                      TimestampNs span_start, TimestampNs span_end) {
    return splits_over_span(timestamps, spec, span_start, span_end);
}

double accuracy(std::span<const double> scores, std::span<const int8_t> labels,
                double threshold) {
    if (scores.size() != labels.size())
        throw DataError("accuracy: scores and labels differ in length");
    if (scores.empty()) throw DataError("accuracy: empty input");
    size_t hits = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const int8_t pred = scores[i] >= threshold ? int8_t{1} : int8_t{-1};
        hits += pred == labels[i];
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

MdaFold mda(const forest::ForestModel& model, const forest::ColumnsView& test_columns,
            std::span<const int8_t> test_labels, const MdaConfig& cfg, int fold_index) {
    if (test_columns.size() != model.feature_names.size())
        throw DataError("mda: column count does not match the model");
    if (cfg.repeats < 1) throw ConfigError("mda: repeats must be positive");

    MdaFold out;
    out.fold = fold_index;
    const std::vector<double> base = forest::predict_proba(model, test_columns);
    out.baseline_accuracy = accuracy(base, test_labels);
    if (out.baseline_accuracy == 0.0)
        throw DegeneracyError("mda: baseline accuracy is zero");

    const size_t n_rows = test_columns.empty() ? 0 : test_columns[0].size();
    out.mda.resize(test_columns.size(), 0.0);
    for (size_t f = 0; f < test_columns.size(); ++f) {
        std::vector<double> permuted(test_columns[f].begin(), test_columns[f].end());
        forest::ColumnsView view = test_columns;
        view[f] = permuted;
        double total = 0.0;
        for (int r = 0; r < cfg.repeats; ++r) {
            const uint64_t tag = (static_cast<uint64_t>(f) << 20) | static_cast<uint64_t>(r);
            Rng rng = Rng::stream(cfg.seed, static_cast<uint64_t>(fold_index), tag);
            std::copy(test_columns[f].begin(), test_columns[f].end(), permuted.begin());
            rng.shuffle(permuted);
            const double acc = accuracy(forest::predict_proba(model, view), test_labels);
            total += (out.baseline_accuracy - acc) / out.baseline_accuracy;
        }
        out.mda[f] = total / static_cast<double>(cfg.repeats);
        (void)n_rows;
    }
    return out;
}

MdaReport combine_mda(const std::vector<std::string>& feature_names,
                      std::vector<MdaFold> folds) {
    MdaReport report;
    report.feature_names = feature_names;
    report.folds = std::move(folds);
    if (report.folds.empty()) throw DataError("mda: no folds to combine");
    report.mean_mda.assign(feature_names.size(), 0.0);
    for (const MdaFold& fold : report.folds) {
        if (fold.mda.size() != feature_names.size())
            throw DataError("mda: fold feature count mismatch");
        for (size_t f = 0; f < fold.mda.size(); ++f) report.mean_mda[f] += fold.mda[f];
    }
    for (double& v : report.mean_mda) v /= static_cast<double>(report.folds.size());
    return report;
}

GroupedMda grouped_mda(const MdaReport& report,
                       const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
    GroupedMda out;
    std::vector<std::vector<size_t>> members;
    for (const auto& [name, features] : groups) {
        out.group_names.push_back(name);
        std::vector<size_t> idx;
        for (const std::string& feat : features) {
            const auto it =
                std::find(report.feature_names.begin(), report.feature_names.end(), feat);
            if (it == report.feature_names.end())
                throw ConfigError("mda group '" + name + "': unknown feature '" + feat + "'");
            idx.push_back(static_cast<size_t>(it - report.feature_names.begin()));
        }
        if (idx.empty()) throw ConfigError("mda group '" + name + "' is empty");
        members.push_back(std::move(idx));
    }

    out.mean.assign(groups.size(), 0.0);
    for (const MdaFold& fold : report.folds) {
        std::vector<double> row(groups.size());
        for (size_t g = 0; g < groups.size(); ++g) {
            double total = 0.0;
            for (size_t f : members[g]) total += fold.mda[f];
            row[g] = total / static_cast<double>(members[g].size());
            out.mean[g] += row[g];
        }
        out.per_fold.push_back(std::move(row));
    }
    for (double& v : out.mean) v /= static_cast<double>(report.folds.size());
    return out;
}

void write_mda_csv(const std::string& path, const MdaReport& report,
                   const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"fold", "feature", "mda", "baseline_accuracy"});
    for (const MdaFold& fold : report.folds)
        for (size_t f = 0; f < report.feature_names.size(); ++f)
            w.row({std::to_string(fold.fold), report.feature_names[f],
                   format_double(fold.mda[f]), format_double(fold.baseline_accuracy)});
    for (size_t f = 0; f < report.feature_names.size(); ++f)
        w.row({"mean", report.feature_names[f], format_double(report.mean_mda[f]), ""});
}

}  // namespace hftnet::eval
