#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hftnet/bars.hpp"
#include "hftnet/common.hpp"
#include "hftnet/eval.hpp"
#include "hftnet/features.hpp"
#include "hftnet/measures.hpp"
#include "hftnet/network.hpp"

namespace hftnet::cli {

inline constexpr const char* kVersion = "0.1.0";

uint64_t fnv1a(std::string_view data);
std::string hex64(uint64_t value);
uint64_t digest_file(const std::string& path);  // fnv1a over the raw bytes

// Everything a run needs; populated from a JSON config file, then overridden
// by command-line flags. The canonical JSON form feeds the config hash, so
// two runs with the same effective settings share a hash.
struct RunConfig {
    std::string trades_path;
    std::string firms_path;  // optional symbol,mcap[,sector] CSV
    std::string out_dir = ".";
    std::string from_date;   // inclusive YYYY-MM-DD, empty = open
    std::string to_date;     // exclusive

    int64_t min_trades_per_bar = 5;
    double max_sparse_fraction = 0.25;

    int lookback = 50;
    int horizon = 50;
    std::string measure = "vol";
    std::string sigma_mode = "global";
    int trees = 1000;
    int m_candidates = 0;  // 0 = floor(sqrt(p))
    std::string criterion = "entropy";
    int boot = 2000;
    double alpha = 0.05;
    std::string split = "purged:G=6,purge=5d";
    int64_t min_rows = 200;
    uint64_t seed = 0;
    int jobs = 0;  // 0 = all cores, 1 = serial

    static RunConfig from_file(const std::string& path);
    void merge_json(const std::string& text, const std::string& origin);

    std::string canonical_json() const;
    std::string hash() const;  // hex64(fnv1a(canonical_json()))
    void validate() const;

    measures::MeasureKind measure_kind() const;
    features::FeatureConfig feature_config() const;
    forest::ForestConfig forest_config() const;
    eval::SplitSpec split_spec() const;
    network::PairwiseConfig pairwise_config() const;
    bool parallel() const { return jobs != 1; }
};

struct FirmMeta {
    double mcap = missing();
    std::string sector;
};

// CSV with header symbol,mcap[,sector]
std::map<std::string, FirmMeta> read_firm_meta(const std::string& path);

struct ScreenedFirm {
    std::string symbol;
    std::string reason;
};

struct Panel {
    bars::SessionGrid grid;
    std::vector<bars::BarSeries> series;  // post fill, same order as firms
    std::vector<network::FirmData> firms;
    bars::FilterStats filter_stats;
    std::vector<ScreenedFirm> screened_out;
};

// filter -> group -> aggregate -> screen -> fill -> features + measures
Panel build_panel(std::vector<bars::Trade> raw, const RunConfig& cfg,
                  const std::map<std::string, FirmMeta>& meta);

void write_edges_csv(const std::string& path, const network::PairwiseResult& result,
                     const std::string& manifest_id = "");
void write_failures_csv(const std::string& path,
                        const std::vector<network::PairFailure>& failures,
                        const std::string& manifest_id = "");

// run_manifest.json: config echo + hash, input digests, drop counts, timings
void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const Panel* panel, double elapsed_seconds);

}  // namespace hftnet::cli
