#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hftnet/measures.hpp"
#include "hftnet/rng.hpp"

namespace hftnet::forest {

// Column view over a feature matrix; lets MDA substitute one permuted column
// without copying the rest.
using ColumnsView = std::vector<std::span<const double>>;

ColumnsView view_of(const measures::Dataset& ds);

struct TreeNode {
    int feature = -1;        // internal nodes only
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    int64_t votes_neg = 0;
    int64_t votes_pos = 0;
    int8_t prediction = -1;  // leaf majority, ties -> -1
    bool is_leaf = false;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    int8_t predict_row(const ColumnsView& columns, size_t row) const;
};

enum class SplitCriterion { entropy, gini };

struct ForestConfig {
    int n_trees = 1000;     // K
    int m_candidates = 0;   // 0 = floor(sqrt(p))
    uint64_t seed = 0;
    SplitCriterion criterion = SplitCriterion::entropy;
};

struct ForestModel {
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;
    int m = 0;
    uint64_t seed = 0;
    double weight_pos = 0.0;  // 1/n_I
    double weight_neg = 0.0;  // 1/n_D
    SplitCriterion criterion = SplitCriterion::entropy;

    int n_features() const { return static_cast<int>(feature_names.size()); }
};

struct SplitResult {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Best (feature, midpoint threshold) over the candidate features by
// information gain; ties broken by lowest feature index, then lowest
// threshold. Not found when the node is pure or no split has positive gain.
SplitResult best_split(const ColumnsView& columns, std::span<const int8_t> labels,
                       std::span<const size_t> rows, std::span<const int> candidates,
                       SplitCriterion criterion);

// Grows one tree to purity / single-row leaves, drawing a fresh size-m
// candidate subset per split from `rng`.
Tree fit_tree(const ColumnsView& columns, std::span<const int8_t> labels,
              std::vector<size_t> sample_rows, int m, Rng& rng, SplitCriterion criterion);

// K trees on class-weighted bootstrap samples; tree k draws from the stream
// derived from (seed, k), so the fit is identical at any thread count.
ForestModel fit_forest(const measures::Dataset& ds, const ForestConfig& cfg);
ForestModel fit_forest_serial(const measures::Dataset& ds, const ForestConfig& cfg);

// Same fit restricted to a row subset (fold training)
ForestModel fit_forest_rows(const measures::Dataset& ds, std::span<const size_t> rows,
                            const ForestConfig& cfg);
ForestModel fit_forest_rows_serial(const measures::Dataset& ds, std::span<const size_t> rows,
                                   const ForestConfig& cfg);

// probability of class +1 = fraction of trees voting +1
std::vector<double> predict_proba(const ForestModel& model, const ColumnsView& columns);
std::vector<double> predict_proba_rows(const ForestModel& model, const ColumnsView& columns,
                                       std::span<const size_t> rows);

// Versioned JSON round trip for golden-file tests; not a stable interchange
// format.
std::string to_json(const ForestModel& model);
ForestModel model_from_json(const std::string& text);
void save_model(const std::string& path, const ForestModel& model);
ForestModel load_model(const std::string& path);

}  // namespace hftnet::forest
