#include "hftnet/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hftnet/common.hpp"

#include <json.hpp>

namespace hftnet::forest {

namespace {

double impurity(int64_t n_neg, int64_t n_pos, SplitCriterion criterion) {
    const int64_t n = n_neg + n_pos;
    if (n == 0 || n_neg == 0 || n_pos == 0) return 0.0;
    const double p = static_cast<double>(n_pos) / static_cast<double>(n);
    const double q = 1.0 - p;
    if (criterion == SplitCriterion::entropy) return -(p * std::log2(p) + q * std::log2(q));
    return 1.0 - p * p - q * q;  // gini
}

struct ValueLabel {
    double value;
    int8_t label;
};

// Weighted sampler over row indices (Vose alias method).
class AliasTable {
public:
    AliasTable(std::span<const int8_t> labels, double w_pos, double w_neg) {
        const size_t n = labels.size();
        prob_.resize(n);
        alias_.resize(n);
        double total = 0.0;
        std::vector<double> scaled(n);
        for (size_t i = 0; i < n; ++i) {
            scaled[i] = labels[i] > 0 ? w_pos : w_neg;
            total += scaled[i];
        }
        const double scale = static_cast<double>(n) / total;
        std::vector<size_t> small, large;
        for (size_t i = 0; i < n; ++i) {
            scaled[i] *= scale;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const size_t s = small.back();
            small.pop_back();
            const size_t l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (size_t i : large) prob_[i] = 1.0, alias_[i] = i;
        for (size_t i : small) prob_[i] = 1.0, alias_[i] = i;
    }

    size_t draw(Rng& rng) const {
        const size_t j = static_cast<size_t>(rng.below(prob_.size()));
        return rng.uniform() < prob_[j] ? j : alias_[j];
    }

private:
    std::vector<double> prob_;
    std::vector<size_t> alias_;
};

}  // namespace

ColumnsView view_of(const measures::Dataset& ds) {
    ColumnsView view;
    view.reserve(ds.columns.size());
    for (const auto& col : ds.columns) view.emplace_back(col.data(), col.size());
    return view;
}

int8_t Tree::predict_row(const ColumnsView& columns, size_t row) const {
    int node = 0;
    while (!nodes[static_cast<size_t>(node)].is_leaf) {
        const TreeNode& nd = nodes[static_cast<size_t>(node)];
        node = columns[static_cast<size_t>(nd.feature)][row] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<size_t>(node)].prediction;
}

SplitResult best_split(const ColumnsView& columns, std::span<const int8_t> labels,
                       std::span<const size_t> rows, std::span<const int> candidates,
                       SplitCriterion criterion) {
    SplitResult best;
    const int64_t n = static_cast<int64_t>(rows.size());
    int64_t parent_pos = 0;
    for (size_t r : rows) parent_pos += labels[r] > 0;
    const int64_t parent_neg = n - parent_pos;
    if (parent_pos == 0 || parent_neg == 0) return best;  // pure node
    const double parent_impurity = impurity(parent_neg, parent_pos, criterion);

    std::vector<ValueLabel> sorted(rows.size());
    for (int f : candidates) {
        const std::span<const double> col = columns[static_cast<size_t>(f)];
        for (size_t i = 0; i < rows.size(); ++i)
            sorted[i] = {col[rows[i]], labels[rows[i]]};
        std::sort(sorted.begin(), sorted.end(),
                  [](const ValueLabel& a, const ValueLabel& b) { return a.value < b.value; });

        int64_t left_pos = 0, left_n = 0;
        for (int64_t i = 0; i + 1 < n; ++i) {
            left_pos += sorted[static_cast<size_t>(i)].label > 0;
            ++left_n;
            // thresholds only at boundaries between distinct values
            if (sorted[static_cast<size_t>(i)].value == sorted[static_cast<size_t>(i + 1)].value)
                continue;
            const int64_t right_n = n - left_n;
            const int64_t right_pos = parent_pos - left_pos;
            const double gain =
                parent_impurity -
                (static_cast<double>(left_n) / static_cast<double>(n)) *
                    impurity(left_n - left_pos, left_pos, criterion) -
                (static_cast<double>(right_n) / static_cast<double>(n)) *
                    impurity(right_n - right_pos, right_pos, criterion);
            if (gain > best.gain) {
                best.found = true;
                best.gain = gain;
                best.feature = f;
                best.threshold = sorted[static_cast<size_t>(i)].value +
                                 0.5 * (sorted[static_cast<size_t>(i + 1)].value -
                                        sorted[static_cast<size_t>(i)].value);
            }
        }
    }
    if (best.gain <= 0.0) best.found = false;
    return best;
}

Tree fit_tree(const ColumnsView& columns, std::span<const int8_t> labels,
              std::vector<size_t> sample_rows, int m, Rng& rng, SplitCriterion criterion) {
    const int p = static_cast<int>(columns.size());
    Tree tree;
    tree.nodes.reserve(2 * sample_rows.size());

    std::vector<int> feature_pool(static_cast<size_t>(p));
    for (int f = 0; f < p; ++f) feature_pool[static_cast<size_t>(f)] = f;
    std::vector<int> candidates(static_cast<size_t>(m));

    struct Work {
        size_t begin, end;
        int node;
    };
    std::vector<Work> stack;

    tree.nodes.emplace_back();
    stack.push_back({0, sample_rows.size(), 0});

    while (!stack.empty()) {
        const Work w = stack.back();
        stack.pop_back();
        TreeNode& node = tree.nodes[static_cast<size_t>(w.node)];
        int64_t n_pos = 0;
        for (size_t i = w.begin; i < w.end; ++i) n_pos += labels[sample_rows[i]] > 0;
        const int64_t n_rows = static_cast<int64_t>(w.end - w.begin);
        node.votes_pos = n_pos;
        node.votes_neg = n_rows - n_pos;

        SplitResult split;
        if (n_pos != 0 && n_pos != n_rows && n_rows > 1) {
            // fresh candidate subset for this split (partial Fisher-Yates),
            // sorted so the tie rule is by feature index, not draw order
            for (int i = 0; i < m; ++i) {
                const size_t j =
                    static_cast<size_t>(i) + static_cast<size_t>(rng.below(
                                                 static_cast<uint64_t>(p - i)));
                std::swap(feature_pool[static_cast<size_t>(i)], feature_pool[j]);
                candidates[static_cast<size_t>(i)] = feature_pool[static_cast<size_t>(i)];
            }
            std::sort(candidates.begin(), candidates.end());
            split = best_split(columns,
                               labels,
                               std::span<const size_t>(sample_rows.data() + w.begin,
                                                       w.end - w.begin),
                               candidates, criterion);
        }

        if (!split.found) {
            node.is_leaf = true;
            node.prediction = node.votes_pos > node.votes_neg ? 1 : -1;
            continue;
        }

        const std::span<const double> col = columns[static_cast<size_t>(split.feature)];
        auto mid_it = std::partition(
            sample_rows.begin() + static_cast<std::ptrdiff_t>(w.begin),
            sample_rows.begin() + static_cast<std::ptrdiff_t>(w.end),
            [&](size_t r) { return col[r] <= split.threshold; });
        const size_t mid = static_cast<size_t>(mid_it - sample_rows.begin());

        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        const int left = node.left, right = node.right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        // right child first so the left subtree is processed (and numbered)
        // depth-first in a fixed order
        stack.push_back({mid, w.end, right});
        stack.push_back({w.begin, mid, left});
    }
    return tree;
}

namespace {

ForestModel fit_rows_impl(const measures::Dataset& ds, std::span<const size_t> rows,
                          const ForestConfig& cfg, bool parallel) {
    const int p = ds.n_features();
    const int64_t n = static_cast<int64_t>(rows.size());
    if (cfg.n_trees < 1) throw ConfigError("forest needs at least one tree");
    if (n < 2) throw DataError("dataset has fewer than 2 rows");

    std::vector<int8_t> row_labels(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) row_labels[i] = ds.labels[rows[i]];
    int64_t n_pos = 0;
    for (int8_t y : row_labels) n_pos += y > 0;
    const int64_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("dataset for " + ds.task.target_symbol +
                        " has a single class; class weights are undefined");

    ForestModel model;
    model.feature_names = ds.feature_names;
    model.m = cfg.m_candidates > 0
                  ? cfg.m_candidates
                  : static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
    if (model.m < 1 || model.m > p) throw ConfigError("candidate count m out of range");
    model.seed = cfg.seed;
    model.criterion = cfg.criterion;
    model.weight_pos = 1.0 / static_cast<double>(n_pos);
    model.weight_neg = 1.0 / static_cast<double>(n_neg);
    model.trees.resize(static_cast<size_t>(cfg.n_trees));

    const ColumnsView columns = view_of(ds);
    const AliasTable sampler(row_labels, model.weight_pos, model.weight_neg);

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int k = 0; k < cfg.n_trees; ++k) {
        Rng rng = Rng::stream(cfg.seed, static_cast<uint64_t>(k));
        std::vector<size_t> sample(rows.size());
        for (size_t i = 0; i < sample.size(); ++i) sample[i] = rows[sampler.draw(rng)];
        model.trees[static_cast<size_t>(k)] =
            fit_tree(columns, ds.labels, std::move(sample), model.m, rng, cfg.criterion);
    }
    return model;
}

std::vector<size_t> all_rows(const measures::Dataset& ds) {
    std::vector<size_t> rows(static_cast<size_t>(ds.n_rows()));
    std::iota(rows.begin(), rows.end(), size_t{0});
    return rows;
}

}  // namespace

ForestModel fit_forest(const measures::Dataset& ds, const ForestConfig& cfg) {
    return fit_rows_impl(ds, all_rows(ds), cfg, true);
}

ForestModel fit_forest_serial(const measures::Dataset& ds, const ForestConfig& cfg) {
    return fit_rows_impl(ds, all_rows(ds), cfg, false);
}

ForestModel fit_forest_rows(const measures::Dataset& ds, std::span<const size_t> rows,
                            const ForestConfig& cfg) {
    return fit_rows_impl(ds, rows, cfg, true);
}

ForestModel fit_forest_rows_serial(const measures::Dataset& ds, std::span<const size_t> rows,
                                   const ForestConfig& cfg) {
    return fit_rows_impl(ds, rows, cfg, false);
}

std::vector<double> predict_proba(const ForestModel& model, const ColumnsView& columns) {
    if (static_cast<int>(columns.size()) != model.n_features())
        throw DataError("prediction input has " + std::to_string(columns.size()) +
                        " features; model expects " + std::to_string(model.n_features()));
    const size_t n = columns.empty() ? 0 : columns.front().size();
    std::vector<int> votes(n, 0);
    for (const Tree& tree : model.trees)
        for (size_t row = 0; row < n; ++row)
            votes[row] += tree.predict_row(columns, row) > 0;
    std::vector<double> proba(n);
    const double inv_k = 1.0 / static_cast<double>(model.trees.size());
    for (size_t row = 0; row < n; ++row) proba[row] = votes[row] * inv_k;
    return proba;
}

std::vector<double> predict_proba_rows(const ForestModel& model, const ColumnsView& columns,
                                       std::span<const size_t> rows) {
    if (static_cast<int>(columns.size()) != model.n_features())
        throw DataError("prediction input has " + std::to_string(columns.size()) +
                        " features; model expects " + std::to_string(model.n_features()));
    std::vector<int> votes(rows.size(), 0);
    for (const Tree& tree : model.trees)
        for (size_t i = 0; i < rows.size(); ++i)
            votes[i] += tree.predict_row(columns, rows[i]) > 0;
    std::vector<double> proba(rows.size());
    const double inv_k = 1.0 / static_cast<double>(model.trees.size());
    for (size_t i = 0; i < rows.size(); ++i) proba[i] = votes[i] * inv_k;
    return proba;
}

namespace {

nlohmann::json node_to_json(const Tree& tree, int index) {
    const TreeNode& node = tree.nodes[static_cast<size_t>(index)];
    nlohmann::json j;
    j["votes_neg"] = node.votes_neg;
    j["votes_pos"] = node.votes_pos;
    if (node.is_leaf) {
        j["leaf"] = true;
        j["prediction"] = static_cast<int>(node.prediction);
    } else {
        j["feature"] = node.feature;
        j["threshold"] = node.threshold;
        j["left"] = node_to_json(tree, node.left);
        j["right"] = node_to_json(tree, node.right);
    }
    return j;
}

int node_from_json(const nlohmann::json& j, Tree& tree) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    {
        TreeNode& node = tree.nodes[static_cast<size_t>(index)];
        node.votes_neg = j.at("votes_neg").get<int64_t>();
        node.votes_pos = j.at("votes_pos").get<int64_t>();
    }
    if (j.contains("leaf")) {
        TreeNode& node = tree.nodes[static_cast<size_t>(index)];
        node.is_leaf = true;
        node.prediction = static_cast<int8_t>(j.at("prediction").get<int>());
        return index;
    }
    const int feature = j.at("feature").get<int>();
    const double threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), tree);
    const int right = node_from_json(j.at("right"), tree);
    TreeNode& node = tree.nodes[static_cast<size_t>(index)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return index;
}

}  // namespace

std::string to_json(const ForestModel& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["n_trees"] = model.trees.size();
    j["m"] = model.m;
    j["seed"] = model.seed;
    j["criterion"] = model.criterion == SplitCriterion::entropy ? "entropy" : "gini";
    j["feature_names"] = model.feature_names;
    j["class_weights"] = {{"pos", model.weight_pos}, {"neg", model.weight_neg}};
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& tree : model.trees) trees.push_back(node_to_json(tree, 0));
    j["trees"] = std::move(trees);
    return j.dump();
}

ForestModel model_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != 1)
        throw DataError("unsupported model format version");
    ForestModel model;
    model.m = j.at("m").get<int>();
    model.seed = j.at("seed").get<uint64_t>();
    model.criterion = j.at("criterion").get<std::string>() == "gini" ? SplitCriterion::gini
                                                                     : SplitCriterion::entropy;
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.weight_pos = j.at("class_weights").at("pos").get<double>();
    model.weight_neg = j.at("class_weights").at("neg").get<double>();
    for (const auto& tj : j.at("trees")) {
        Tree tree;
        node_from_json(tj, tree);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

void save_model(const std::string& path, const ForestModel& model) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << to_json(model) << "\n";
}

ForestModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace hftnet::forest
