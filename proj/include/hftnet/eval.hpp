#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hftnet/forest.hpp"
#include "hftnet/timeutil.hpp"

namespace hftnet::eval {

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;
};

struct RocResult {
    std::vector<RocPoint> points;  // (0,0) ... (1,1), thresholds descending
    double auc = 0.0;              // rank-statistic form, ties count 1/2
    int64_t n_pos = 0;
    int64_t n_neg = 0;
};

// Rank-form AUC + full curve. Throws DataError when only one class is present.
RocResult roc_auc(std::span<const double> scores, std::span<const int8_t> labels);

// AUC only (used in the bootstrap inner loop)
double auc_rank(std::span<const double> scores, std::span<const int8_t> labels);

// Midranks scaled to (0,1): midrank / (n+1). Order-isomorphic to the input
// (ties map to ties), so any AUC over the result equals the AUC over the
// input. Used to make score scales comparable before pooling across folds.
std::vector<double> rank_unit_scores(std::span<const double> scores);

double trapezoid_area(const std::vector<RocPoint>& points);

void write_roc_csv(const std::string& path, const RocResult& roc,
                   const std::string& manifest_id = "");

struct AucTestResult {
    double auc1 = 0.0;  // observed AUC of the no-cross model
    double auc2 = 0.0;  // observed AUC of the cross-feature model
    double diff = 0.0;  // auc2 - auc1
    double s = 0.0;     // sample sd of bootstrap differences
    double d_stat = 0.0;
    double p_value = 1.0;
    int b = 0;
    uint64_t seed = 0;
    bool degenerate_s = false;  // s was 0; p forced to 0/1 by the sign of diff
};

struct BootstrapConfig {
    int b = 2000;
    uint64_t seed = 0;
    int max_retries = 100;  // redraws allowed for a single-class replicate
};

// Paired bootstrap test of H0: AUC2 = AUC1 vs H_A: AUC2 > AUC1. Resamples
// the (p1, p2, label) triples jointly B times; D = diff / sd(differences);
// p = 1 - Phi(D). Replicate b draws from the stream (seed, b), so the result
// is identical at any thread count.
AucTestResult bootstrap_auc_test(std::span<const double> p1, std::span<const double> p2,
                                 std::span<const int8_t> labels, const BootstrapConfig& cfg);
AucTestResult bootstrap_auc_test_serial(std::span<const double> p1, std::span<const double> p2,
                                        std::span<const int8_t> labels,
                                        const BootstrapConfig& cfg);

struct Fold {
    std::vector<size_t> train;
    std::vector<size_t> test;
    TimestampNs test_start = 0;  // inclusive
    TimestampNs test_end = 0;    // exclusive
};

enum class SplitMode { purged_cv, chronological };

struct SplitSpec {
    SplitMode mode = SplitMode::chronological;
    int g = 6;                    // purged_cv interval count
    double train_fraction = 0.5;  // chronological
    int64_t purge_ns = 5 * kNsPerDay;

    // "purged:G=6,purge=5d" or "chrono:frac=0.5,purge=5d"
    static SplitSpec parse(const std::string& text);
    std::string describe() const;
};

struct SplitPlan {
    SplitSpec spec;
    std::vector<Fold> folds;
};

// Timestamps must be sorted ascending. purged_cv: G equal-length time
// intervals, each a test fold, train = rows farther than purge from the
// interval; chronological: one fold, later part tests. Throws DataError when
// a fold has an empty side.
SplitPlan make_splits(std::span<const TimestampNs> timestamps, const SplitSpec& spec);

// Same, with fold boundaries cut from an explicit half-open time span instead
// of the observed data range. Every dataset split against the same span gets
// identical fold intervals, so per-fold models can be shared across datasets.
// Chronological mode places the cutoff at span_start + frac * span length.
SplitPlan make_splits(std::span<const TimestampNs> timestamps, const SplitSpec& spec,
                      TimestampNs span_start, TimestampNs span_end);

// fraction classified correctly when predicting +1 at score >= threshold
double accuracy(std::span<const double> scores, std::span<const int8_t> labels,
                double threshold = 0.5);

struct MdaFold {
    int fold = 0;
    double baseline_accuracy = 0.0;           // A_O
    std::vector<double> mda;                  // per feature
};

struct MdaReport {
    std::vector<std::string> feature_names;
    std::vector<MdaFold> folds;
    std::vector<double> mean_mda;  // across folds
};

struct MdaConfig {
    uint64_t seed = 0;
    int repeats = 1;
};

// Permutation importance for one fold: permute each feature's test column
// (fresh permutation per repeat), MDA_f = (A_O - A_P) / A_O averaged over
// repeats. Throws DegeneracyError when A_O is 0.
MdaFold mda(const forest::ForestModel& model, const forest::ColumnsView& test_columns,
            std::span<const int8_t> test_labels, const MdaConfig& cfg, int fold_index = 0);

MdaReport combine_mda(const std::vector<std::string>& feature_names,
                      std::vector<MdaFold> folds);

struct GroupedMda {
    std::vector<std::string> group_names;
    std::vector<std::vector<double>> per_fold;  // [fold][group]
    std::vector<double> mean;                   // across folds
};

// Per-fold mean of member-feature MDAs for each named group. Throws
// ConfigError for an unknown feature name.
GroupedMda grouped_mda(const MdaReport& report,
                       const std::vector<std::pair<std::string, std::vector<std::string>>>& groups);

void write_mda_csv(const std::string& path, const MdaReport& report,
                   const std::string& manifest_id = "");

}  // namespace hftnet::eval
