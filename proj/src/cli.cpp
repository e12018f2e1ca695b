#include "hftnet/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"

#include <json.hpp>

namespace hftnet::cli {

uint64_t fnv1a(std::string_view data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

uint64_t digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return fnv1a(buf.str());
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    cfg.merge_json(buf.str(), path);
    return cfg;
}

void RunConfig::merge_json(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(origin + ": config must be a JSON object");

    const auto get = [&](const char* key, auto& field) {
        if (!j.contains(key)) return;
        try {
            field = j.at(key).get<std::decay_t<decltype(field)>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(origin + ": bad value for '" + key + "'");
        }
        j.erase(key);
    };
    get("trades", trades_path);
    get("firms", firms_path);
    get("out_dir", out_dir);
    get("from", from_date);
    get("to", to_date);
    get("min_trades_per_bar", min_trades_per_bar);
    get("max_sparse_fraction", max_sparse_fraction);
    get("lookback", lookback);
    get("horizon", horizon);
    get("measure", measure);
    get("sigma_mode", sigma_mode);
    get("trees", trees);
    get("m_candidates", m_candidates);
    get("criterion", criterion);
    get("boot", boot);
    get("alpha", alpha);
    get("split", split);
    get("min_rows", min_rows);
    get("seed", seed);
    get("jobs", jobs);
    if (!j.empty())
        throw ConfigError(origin + ": unknown config key '" + j.begin().key() + "'");
}

std::string RunConfig::canonical_json() const {
    nlohmann::ordered_json j;
    j["alpha"] = alpha;
    j["boot"] = boot;
    j["criterion"] = criterion;
    j["from"] = from_date;
    j["horizon"] = horizon;
    j["lookback"] = lookback;
    j["m_candidates"] = m_candidates;
    j["max_sparse_fraction"] = max_sparse_fraction;
    j["measure"] = measure;
    j["min_rows"] = min_rows;
    j["min_trades_per_bar"] = min_trades_per_bar;
    j["seed"] = seed;
    j["sigma_mode"] = sigma_mode;
    j["split"] = split;
    j["to"] = to_date;
    j["trees"] = trees;
    return j.dump();
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical_json())); }

void RunConfig::validate() const {
    if (lookback < 2) throw ConfigError("lookback must be at least 2");
    if (horizon < 1) throw ConfigError("horizon must be positive");
    if (trees < 1) throw ConfigError("trees must be positive");
    if (boot < 2) throw ConfigError("boot must be at least 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (min_rows < 2) throw ConfigError("min_rows must be at least 2");
    if (jobs < 0) throw ConfigError("jobs must be nonnegative");
    if (min_trades_per_bar < 0) throw ConfigError("min_trades_per_bar must be nonnegative");
    if (!(max_sparse_fraction >= 0.0 && max_sparse_fraction <= 1.0))
        throw ConfigError("max_sparse_fraction must lie in [0,1]");
    if (criterion != "entropy" && criterion != "gini")
        throw ConfigError("criterion must be entropy or gini");
    if (sigma_mode != "global" && sigma_mode != "trailing")
        throw ConfigError("sigma_mode must be global or trailing");
    measures::parse_measure(measure);
    eval::SplitSpec::parse(split);
    if (!from_date.empty()) parse_date(from_date);
    if (!to_date.empty()) parse_date(to_date);
}

measures::MeasureKind RunConfig::measure_kind() const { return measures::parse_measure(measure); }

features::FeatureConfig RunConfig::feature_config() const {
    features::FeatureConfig fc;
    fc.lookback = lookback;
    fc.bvc_sigma_mode = sigma_mode == "trailing" ? features::FeatureConfig::SigmaMode::trailing
                                                 : features::FeatureConfig::SigmaMode::global;
    return fc;
}

forest::ForestConfig RunConfig::forest_config() const {
    forest::ForestConfig fc;
    fc.n_trees = trees;
    fc.m_candidates = m_candidates;
    fc.seed = seed;
    fc.criterion =
        criterion == "gini" ? forest::SplitCriterion::gini : forest::SplitCriterion::entropy;
    return fc;
}

eval::SplitSpec RunConfig::split_spec() const { return eval::SplitSpec::parse(split); }

network::PairwiseConfig RunConfig::pairwise_config() const {
    network::PairwiseConfig pc;
    pc.measure = measure_kind();
    pc.assemble.horizon = horizon;
    pc.assemble.min_rows = min_rows;
    pc.assemble.lookback = lookback;
    pc.assemble.bvc_sigma_mode = sigma_mode;
    pc.forest = forest_config();
    pc.split = split_spec();
    pc.bootstrap_b = boot;
    pc.seed = seed;
    pc.parallel = parallel();
    return pc;
}

std::map<std::string, FirmMeta> read_firm_meta(const std::string& path) {
    CsvTable table = read_csv(path);
    const int c_sym = table.column("symbol");
    const int c_mcap = table.column("mcap");
    const int c_sector = table.column("sector");
    if (c_sym < 0 || c_mcap < 0)
        throw DataError(path + ": header must contain symbol,mcap");

    std::map<std::string, FirmMeta> meta;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        FirmMeta m;
        const std::string& cell = row[static_cast<size_t>(c_mcap)];
        if (!cell.empty()) {
            try {
                m.mcap = std::stod(cell);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(table.line_numbers[i]) +
                                ": bad mcap field");
            }
        }
        if (c_sector >= 0) m.sector = row[static_cast<size_t>(c_sector)];
        meta[row[static_cast<size_t>(c_sym)]] = std::move(m);
    }
    return meta;
}

Panel build_panel(std::vector<bars::Trade> raw, const RunConfig& cfg,
                  const std::map<std::string, FirmMeta>& meta) {
    cfg.validate();
    Panel panel;

    if (!cfg.from_date.empty() || !cfg.to_date.empty()) {
        const int64_t from_day =
            cfg.from_date.empty() ? INT64_MIN : parse_date(cfg.from_date);
        const int64_t to_day = cfg.to_date.empty() ? INT64_MAX : parse_date(cfg.to_date);
        std::erase_if(raw, [&](const bars::Trade& t) {
            const int64_t d = day_of(t.timestamp);
            return d < from_day || d >= to_day;
        });
    }

    const std::vector<bars::Trade> kept =
        bars::filter_trades(raw, bars::FilterRules{}, &panel.filter_stats);
    if (kept.empty()) throw DataError("no trades survive the filters");
    panel.grid = bars::grid_from_trades(kept);

    const features::FeatureConfig feature_cfg = cfg.feature_config();
    for (auto& [symbol, trades] : bars::group_by_symbol(kept)) {
        bars::BarSeries series = bars::aggregate(trades, panel.grid);
        const double sparse = bars::sparse_fraction(series, cfg.min_trades_per_bar);
        if (sparse > cfg.max_sparse_fraction) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "sparse fraction %.3f above limit %.3f", sparse,
                          cfg.max_sparse_fraction);
            panel.screened_out.push_back({symbol, buf});
            continue;
        }
        series = bars::apply_fill_policy(series, bars::FillPolicy::forward_fill_close);

        network::FirmData firm;
        firm.id = symbol;
        if (const auto it = meta.find(symbol); it != meta.end()) {
            firm.mcap = it->second.mcap;
            firm.sector = it->second.sector;
        }
        firm.features = features::compute_frame(series, feature_cfg);
        firm.measures = measures::compute_measures(series, cfg.lookback);
        panel.series.push_back(std::move(series));
        panel.firms.push_back(std::move(firm));
    }
    if (panel.firms.empty()) throw DataError("every firm was screened out");
    return panel;
}

void write_edges_csv(const std::string& path, const network::PairwiseResult& result,
                     const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"source", "target", "auc1", "auc2", "diff", "p", "p_adj", "n_test"});
    for (const network::EdgeResult& e : result.tests)
        w.row({e.source, e.target, format_double(e.auc1), format_double(e.auc2),
               format_double(e.diff), format_double(e.p), format_double(e.p_adj),
               std::to_string(e.n_test)});
}

void write_failures_csv(const std::string& path,
                        const std::vector<network::PairFailure>& failures,
                        const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"source", "target", "reason"});
    for (const network::PairFailure& f : failures) w.row({f.source, f.target, f.reason});
}

void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const Panel* panel, double elapsed_seconds) {
    nlohmann::ordered_json j;
    j["tool"] = "hftnet";
    j["version"] = kVersion;
    j["config_hash"] = cfg.hash();
    j["config"] = nlohmann::ordered_json::parse(cfg.canonical_json());
    nlohmann::ordered_json in = nlohmann::ordered_json::array();
    for (const auto& [role, file] : inputs) {
        nlohmann::ordered_json e;
        e["role"] = role;
        e["path"] = file;
        e["fnv1a"] = hex64(digest_file(file));
        in.push_back(std::move(e));
    }
    j["inputs"] = std::move(in);
    if (panel != nullptr) {
        nlohmann::ordered_json p;
        p["n_firms"] = panel->firms.size();
        p["n_bars"] = panel->grid.n_bars();
        p["trading_days"] = panel->grid.trading_days.size();
        p["dropped_price_volume"] = panel->filter_stats.dropped_price_volume;
        p["dropped_market_hours"] = panel->filter_stats.dropped_market_hours;
        p["dropped_suffix"] = panel->filter_stats.dropped_suffix;
        p["dropped_correction"] = panel->filter_stats.dropped_correction;
        p["trades_kept"] = panel->filter_stats.kept;
        nlohmann::ordered_json sc = nlohmann::ordered_json::array();
        for (const ScreenedFirm& s : panel->screened_out) {
            nlohmann::ordered_json e;
            e["symbol"] = s.symbol;
            e["reason"] = s.reason;
            sc.push_back(std::move(e));
        }
        p["screened_out"] = std::move(sc);
        j["panel"] = std::move(p);
    }
    j["elapsed_seconds"] = elapsed_seconds;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace hftnet::cli
