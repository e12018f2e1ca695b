#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>

#include "hftnet/common.hpp"
#include "hftnet/forest.hpp"
#include "hftnet/rng.hpp"

using namespace hftnet;
using namespace hftnet::forest;

namespace {

// Naive split search: every feature, every midpoint between adjacent distinct
// sorted values, first strict maximum wins (= lowest feature, lowest
// threshold on ties).
struct NaiveSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double naive_impurity(int64_t neg, int64_t pos, SplitCriterion c) {
    const int64_t n = neg + pos;
    if (n == 0 || neg == 0 || pos == 0) return 0.0;
    const double p = double(pos) / double(n);
    if (c == SplitCriterion::entropy)
        return -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
    return 1.0 - p * p - (1 - p) * (1 - p);
}

NaiveSplit naive_best_split(const ColumnsView& cols, std::span<const int8_t> labels,
                            std::span<const size_t> rows, std::span<const int> candidates,
                            SplitCriterion c) {
    NaiveSplit best;
    const int64_t n = static_cast<int64_t>(rows.size());
    int64_t pos = 0;
    for (size_t r : rows) pos += labels[r] > 0;
    if (pos == 0 || pos == n) return best;
    const double parent = naive_impurity(n - pos, pos, c);

    for (int f : candidates) {
        std::vector<double> vals;
        for (size_t r : rows) vals.push_back(cols[size_t(f)][r]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (size_t i = 0; i + 1 < vals.size(); ++i) {
            const double thr = vals[i] + 0.5 * (vals[i + 1] - vals[i]);
            int64_t ln = 0, lp = 0;
            for (size_t r : rows) {
                if (cols[size_t(f)][r] <= thr) {
                    ++ln;
                    lp += labels[r] > 0;
                }
            }
            const int64_t rn = n - ln, rp = pos - lp;
            const double gain = parent - double(ln) / double(n) * naive_impurity(ln - lp, lp, c) -
                                double(rn) / double(n) * naive_impurity(rn - rp, rp, c);
            if (gain > best.gain) {
                best = {true, f, thr, gain};
            }
        }
    }
    if (best.gain <= 0.0) best.found = false;
    return best;
}

measures::Dataset make_dataset(uint64_t seed, int64_t n, int p, double signal) {
    Rng rng(seed);
    measures::Dataset ds;
    ds.task.target_symbol = "T";
    ds.columns.assign(size_t(p), std::vector<double>(size_t(n)));
    for (int f = 0; f < p; ++f) ds.feature_names.push_back("f" + std::to_string(f));
    ds.labels.resize(size_t(n));
    ds.bar_index.resize(size_t(n));
    ds.timestamps.resize(size_t(n));
    for (int64_t i = 0; i < n; ++i) {
        ds.bar_index[size_t(i)] = i;
        ds.timestamps[size_t(i)] = i * kNsPerMin;
        double score = rng.normal();
        for (int f = 0; f < p; ++f) {
            const double x = rng.normal();
            ds.columns[size_t(f)][size_t(i)] = x;
            if (f == 0) score += signal * x;
        }
        ds.labels[size_t(i)] = score > 0 ? 1 : -1;
    }
    return ds;
}

}  // namespace

TEST_CASE("best split matches exhaustive search") {
    Rng rng(301);
    for (int trial = 0; trial < 400; ++trial) {
        const int n = 5 + int(rng.below(40));
        const int p = 1 + int(rng.below(4));
        const int grid = 2 + int(rng.below(6));  // few distinct values forces ties
        std::vector<std::vector<double>> cols(static_cast<size_t>(p),
                                              std::vector<double>(static_cast<size_t>(n)));
        std::vector<int8_t> labels(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            labels[size_t(i)] = rng.uniform() < 0.5 ? 1 : -1;
            for (int f = 0; f < p; ++f)
                cols[size_t(f)][size_t(i)] = double(rng.below(uint64_t(grid)));
        }
        ColumnsView view;
        for (auto& c : cols) view.push_back(c);
        std::vector<size_t> rows(static_cast<size_t>(n));
        std::iota(rows.begin(), rows.end(), size_t{0});
        std::vector<int> candidates(static_cast<size_t>(p));
        std::iota(candidates.begin(), candidates.end(), 0);
        const SplitCriterion c =
            trial % 2 == 0 ? SplitCriterion::entropy : SplitCriterion::gini;

        const SplitResult got = best_split(view, labels, rows, candidates, c);
        const NaiveSplit want = naive_best_split(view, labels, rows, candidates, c);
        REQUIRE(got.found == want.found);
        if (want.found) {
            CHECK(got.feature == want.feature);
            CHECK(got.threshold == doctest::Approx(want.threshold).epsilon(1e-12));
            CHECK(got.gain == doctest::Approx(want.gain).epsilon(1e-12));
        }
    }
}

TEST_CASE("split ties prefer the lowest feature index") {
    // two identical columns: identical best gain, feature 0 must win
    std::vector<double> a{0, 0, 1, 1, 2, 2};
    std::vector<int8_t> labels{-1, -1, -1, 1, 1, 1};
    ColumnsView view{a, a};
    std::vector<size_t> rows{0, 1, 2, 3, 4, 5};
    const std::vector<int> both{0, 1};
    const SplitResult s = best_split(view, labels, rows, both, SplitCriterion::entropy);
    REQUIRE(s.found);
    CHECK(s.feature == 0);
    const std::vector<int> only1{1};
    CHECK(best_split(view, labels, rows, only1, SplitCriterion::entropy).feature == 1);
}

TEST_CASE("split degenerate nodes") {
    std::vector<double> x{1, 1, 1, 1};
    ColumnsView view{x};
    std::vector<size_t> rows{0, 1, 2, 3};
    const std::vector<int> cand{0};
    // constant feature: no boundary to cut
    std::vector<int8_t> mixed{1, -1, 1, -1};
    CHECK_FALSE(best_split(view, mixed, rows, cand, SplitCriterion::entropy).found);
    // pure node
    std::vector<double> y{1, 2, 3, 4};
    ColumnsView vy{y};
    std::vector<int8_t> pure{1, 1, 1, 1};
    CHECK_FALSE(best_split(vy, pure, rows, cand, SplitCriterion::gini).found);
}

TEST_CASE("tree grows to purity on distinct values") {
    Rng rng(55);
    std::vector<double> x(64);
    std::vector<int8_t> labels(64);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        labels[i] = rng.uniform() < 0.5 ? 1 : -1;
    }
    ColumnsView view{x};
    std::vector<size_t> sample(x.size());
    std::iota(sample.begin(), sample.end(), size_t{0});
    Rng tree_rng(7);
    const Tree t = fit_tree(view, labels, sample, 1, tree_rng, SplitCriterion::entropy);
    for (size_t i = 0; i < x.size(); ++i) CHECK(t.predict_row(view, i) == labels[i]);
    // leaf votes account for every training row
    int64_t leaf_rows = 0;
    for (const TreeNode& nd : t.nodes)
        if (nd.is_leaf) leaf_rows += nd.votes_neg + nd.votes_pos;
    CHECK(leaf_rows == int64_t(x.size()));
}

TEST_CASE("class weighted bootstrap balances the root") {
    // 10% positive labels; weighted sampling should draw both classes evenly
    measures::Dataset ds = make_dataset(77, 1000, 2, 0.0);
    for (size_t i = 0; i < ds.labels.size(); ++i) ds.labels[i] = i % 10 == 0 ? 1 : -1;
    ForestConfig fc;
    fc.n_trees = 100;
    fc.seed = 3;
    const ForestModel model = fit_forest_serial(ds, fc);
    double frac_sum = 0.0;
    for (const Tree& t : model.trees) {
        const TreeNode& root = t.nodes[0];
        frac_sum += double(root.votes_pos) / double(root.votes_pos + root.votes_neg);
    }
    CHECK(frac_sum / double(model.trees.size()) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(model.weight_pos == doctest::Approx(1.0 / 100.0));
    CHECK(model.weight_neg == doctest::Approx(1.0 / 900.0));
}

TEST_CASE("forest determinism and parallel equivalence") {
    const measures::Dataset ds = make_dataset(91, 400, 5, 1.0);
    ForestConfig fc;
    fc.n_trees = 50;
    fc.seed = 12;
    const ForestModel a = fit_forest(ds, fc);
    const ForestModel b = fit_forest_serial(ds, fc);
    CHECK(to_json(a) == to_json(b));
    const ForestModel c = fit_forest_serial(ds, fc);
    CHECK(to_json(b) == to_json(c));
    fc.seed = 13;
    const ForestModel d = fit_forest_serial(ds, fc);
    CHECK(to_json(b) != to_json(d));
    CHECK(a.m == 2);  // floor(sqrt(5))
}

TEST_CASE("row subset fit equals restricted dataset fit") {
    const measures::Dataset ds = make_dataset(17, 300, 3, 0.8);
    std::vector<size_t> subset;
    for (size_t i = 40; i < 260; ++i) subset.push_back(i);

    measures::Dataset restricted = ds;
    restricted.labels.clear();
    restricted.bar_index.clear();
    restricted.timestamps.clear();
    for (auto& col : restricted.columns) col.clear();
    for (size_t r : subset) {
        restricted.labels.push_back(ds.labels[r]);
        restricted.bar_index.push_back(ds.bar_index[r]);
        restricted.timestamps.push_back(ds.timestamps[r]);
        for (size_t c = 0; c < ds.columns.size(); ++c)
            restricted.columns[c].push_back(ds.columns[c][r]);
    }
    ForestConfig fc;
    fc.n_trees = 30;
    fc.seed = 5;
    const ForestModel a = fit_forest_rows_serial(ds, subset, fc);
    const ForestModel b = fit_forest_serial(restricted, fc);
    CHECK(to_json(a) == to_json(b));
}

TEST_CASE("predict_proba is the tree vote fraction") {
    const measures::Dataset ds = make_dataset(23, 200, 4, 1.5);
    ForestConfig fc;
    fc.n_trees = 40;
    fc.seed = 9;
    const ForestModel model = fit_forest_serial(ds, fc);
    const ColumnsView view = view_of(ds);
    const std::vector<double> proba = predict_proba(model, view);
    REQUIRE(proba.size() == ds.labels.size());
    for (size_t i = 0; i < proba.size(); ++i) {
        int votes = 0;
        for (const Tree& t : model.trees) votes += t.predict_row(view, i) > 0;
        CHECK(proba[i] == doctest::Approx(double(votes) / 40.0));
        CHECK(proba[i] >= 0.0);
        CHECK(proba[i] <= 1.0);
    }
    // row-subset prediction agrees with the full pass
    std::vector<size_t> rows{3, 77, 150};
    const std::vector<double> sub = predict_proba_rows(model, view, rows);
    REQUIRE(sub.size() == 3);
    for (size_t k = 0; k < rows.size(); ++k) CHECK(sub[k] == proba[rows[k]]);
    // a strong single-feature signal is learnable in sample
    int64_t correct = 0;
    for (size_t i = 0; i < proba.size(); ++i)
        correct += (proba[i] > 0.5 ? 1 : -1) == ds.labels[i];
    CHECK(double(correct) / double(proba.size()) > 0.9);
}

TEST_CASE("forest config validation") {
    const measures::Dataset ds = make_dataset(31, 50, 3, 0.0);
    ForestConfig fc;
    fc.n_trees = 0;
    CHECK_THROWS_AS(fit_forest_serial(ds, fc), ConfigError);
    fc.n_trees = 5;
    fc.m_candidates = 4;  // > p
    CHECK_THROWS_AS(fit_forest_serial(ds, fc), ConfigError);
    fc.m_candidates = 0;

    measures::Dataset single = ds;
    for (auto& y : single.labels) y = 1;
    CHECK_THROWS_AS(fit_forest_serial(single, fc), DataError);

    measures::Dataset tiny = make_dataset(32, 1, 3, 0.0);
    CHECK_THROWS_AS(fit_forest_serial(tiny, fc), DataError);
}

TEST_CASE("model json round trip") {
    const measures::Dataset ds = make_dataset(41, 150, 6, 1.0);
    ForestConfig fc;
    fc.n_trees = 20;
    fc.seed = 77;
    fc.criterion = SplitCriterion::gini;
    const ForestModel model = fit_forest_serial(ds, fc);
    const std::string text = to_json(model);
    const ForestModel back = model_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.m == model.m);
    CHECK(back.seed == model.seed);
    CHECK(back.weight_pos == model.weight_pos);
    CHECK(back.weight_neg == model.weight_neg);
    CHECK(back.criterion == model.criterion);
    CHECK(back.feature_names == model.feature_names);
    const ColumnsView view = view_of(ds);
    CHECK(predict_proba(back, view) == predict_proba(model, view));

    const std::string path = "/tmp/hftnet_test_model.json";
    save_model(path, model);
    const ForestModel loaded = load_model(path);
    CHECK(to_json(loaded) == text);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model("/tmp/hftnet_no_such_model.json"), DataError);
}
