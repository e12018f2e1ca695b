#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hftnet/bars.hpp"
#include "hftnet/common.hpp"
#include "hftnet/eval.hpp"
#include "hftnet/features.hpp"
#include "hftnet/forest.hpp"
#include "hftnet/measures.hpp"

namespace hftnet::network {

struct FirmData {
    std::string id;
    double mcap = missing();
    std::string sector;
    features::FeatureFrame features;
    measures::MeasureSeries measures;
};

struct EdgeResult {
    std::string source;
    std::string target;
    double auc1 = 0.0;  // target features only
    double auc2 = 0.0;  // target + source features
    double diff = 0.0;  // auc2 - auc1
    double p = 1.0;
    double p_adj = 1.0;
    int64_t n_test = 0;
    bool degenerate_s = false;
};

struct PairFailure {
    std::string source;  // empty when the whole target firm failed
    std::string target;
    std::string reason;
};

struct PairwiseConfig {
    measures::MeasureKind measure = measures::MeasureKind::realized_volatility;
    measures::AssembleConfig assemble;
    forest::ForestConfig forest;  // forest.seed is ignored; seeds derive from `seed`
    eval::SplitSpec split;
    int bootstrap_b = 2000;
    uint64_t seed = 0;
    bool parallel = true;
};

struct PairwiseResult {
    std::vector<EdgeResult> tests;  // ordered (source, target) pairs, p_adj filled in
    std::vector<PairFailure> failures;
    int n_firms = 0;
};

// Fits the two models for every ordered firm pair, pools out-of-sample
// predictions across folds and runs the bootstrap AUC test. The
// target-features-only model is fitted once per (target, fold) and shared
// across sources; fold boundaries are cut from the full grid span so that
// sharing is exact. Firms or pairs that cannot produce a dataset are
// reported in `failures` and excluded from the adjustment.
PairwiseResult pairwise_edges(const std::vector<FirmData>& firms,
                              const bars::SessionGrid& grid, const PairwiseConfig& cfg);

// Benjamini-Hochberg step-up adjustment, input order preserved
std::vector<double> bh_adjust(std::span<const double> p_values);

// fills p_adj across all successful tests (one family per call)
void apply_bh(PairwiseResult& result);

struct NodeInfo {
    std::string id;
    double mcap = missing();
    std::string sector;
};

struct Network {
    std::vector<NodeInfo> nodes;
    std::vector<EdgeResult> edges;  // p_adj <= alpha, sorted by (source, target)
    double alpha = 0.05;
    uint64_t seed = 0;
    std::string config_hash;
};

Network build_network(const std::vector<FirmData>& firms, const PairwiseResult& result,
                      double alpha, uint64_t seed, const std::string& config_hash);

// |E| / (N (N-1)); 0 when N < 2
double density(const Network& net);

struct DegreeReport {
    std::vector<std::string> ids;
    std::vector<int> in_degree;
    std::vector<int> out_degree;
    std::vector<double> in_std;   // (d - mean) / sample sd, zeros when sd = 0
    std::vector<double> out_std;
    bool in_degenerate = false;
    bool out_degenerate = false;
};

DegreeReport degrees(const Network& net);

// induced subnetwork on the listed node ids (unknown ids rejected)
Network subnetwork(const Network& net, const std::vector<std::string>& ids);

// Value-weighted cross-sectional mean per time slot; weights renormalized
// over the firms present (finite) at that slot, missing when none are.
std::vector<double> value_weighted_series(const std::vector<std::span<const double>>& series,
                                          std::span<const double> weights);

struct SizeGroups {
    std::vector<size_t> small;  // mcap <= median
    std::vector<size_t> large;
    std::vector<size_t> unknown;  // missing mcap, left out of both groups
};

SizeGroups split_by_mcap(std::span<const double> mcaps);

struct DensityRow {
    TimestampNs window_start = 0;
    TimestampNs window_end = 0;
    double density = 0.0;
    int n_firms = 0;
    int n_edges = 0;
};

std::string to_json(const Network& net);
void write_network_json(const std::string& path, const Network& net);
Network network_from_json(const std::string& text);
Network load_network(const std::string& path);

std::string to_dot(const Network& net);
std::string to_graphml(const Network& net);
void write_dot(const std::string& path, const Network& net);
void write_graphml(const std::string& path, const Network& net);

void write_degrees_csv(const std::string& path, const DegreeReport& report,
                       const std::string& manifest_id = "");
void write_density_csv(const std::string& path, const std::vector<DensityRow>& rows,
                       const std::string& manifest_id = "");

}  // namespace hftnet::network
