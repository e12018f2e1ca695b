#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hftnet/cli.hpp"
#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"
#include "hftnet/synth.hpp"

namespace fs = std::filesystem;
using namespace hftnet;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void apply_jobs(const cli::RunConfig& cfg) {
#ifdef _OPENMP
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
#else
    (void)cfg;
#endif
}

std::string out_path(const cli::RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

void add_run_options(CLI::App* cmd, cli::RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file, applied before other flags")
        ->type_name("FILE");
    cmd->add_option("--trades", cfg.trades_path, "trade records CSV");
    cmd->add_option("--firms", cfg.firms_path, "firm metadata CSV (symbol,mcap[,sector])");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory");
    cmd->add_option("--from", cfg.from_date, "first trading date, inclusive (YYYY-MM-DD)");
    cmd->add_option("--to", cfg.to_date, "end trading date, exclusive (YYYY-MM-DD)");
    cmd->add_option("--lookback", cfg.lookback, "feature window W in bars");
    cmd->add_option("--horizon", cfg.horizon, "label horizon h in bars");
    cmd->add_option("--measure", cfg.measure, "target measure: vol or kurt");
    cmd->add_option("--sigma-mode", cfg.sigma_mode, "BVC sigma: global or trailing");
    cmd->add_option("--trees", cfg.trees, "trees per forest (K)");
    cmd->add_option("--m", cfg.m_candidates, "split candidates per node, 0 = floor(sqrt(p))");
    cmd->add_option("--criterion", cfg.criterion, "split criterion: entropy or gini");
    cmd->add_option("--boot", cfg.boot, "bootstrap replicates (B)");
    cmd->add_option("--alpha", cfg.alpha, "FDR level for edges");
    cmd->add_option("--split", cfg.split,
                    "purged:G=<n>,purge=<d>d or chrono:frac=<f>,purge=<d>d");
    cmd->add_option("--min-rows", cfg.min_rows, "minimum dataset rows per task");
    cmd->add_option("--min-trades-per-bar", cfg.min_trades_per_bar,
                    "bars below this trade count are considered sparse");
    cmd->add_option("--max-sparse-fraction", cfg.max_sparse_fraction,
                    "screen out firms with more sparse bars than this fraction");
    cmd->add_option("--seed", cfg.seed, "master RNG seed");
    cmd->add_option("--jobs", cfg.jobs, "worker threads, 0 = all cores, 1 = serial");
}

// --config is applied before the flag values, so flags win
void preload_config(int argc, char** argv, cli::RunConfig& cfg) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            cfg = cli::RunConfig::from_file(argv[i + 1]);
            return;
        }
        if (arg.rfind("--config=", 0) == 0) {
            cfg = cli::RunConfig::from_file(arg.substr(9));
            return;
        }
    }
}

std::vector<bars::Trade> load_trades(const cli::RunConfig& cfg) {
    if (cfg.trades_path.empty()) throw ConfigError("--trades is required");
    return bars::read_trades_csv(cfg.trades_path);
}

void print_filter_stats(const bars::FilterStats& stats) {
    std::cerr << "filters: kept " << stats.kept << ", dropped " << stats.total() << " ("
              << stats.dropped_price_volume << " price/volume, " << stats.dropped_market_hours
              << " outside hours, " << stats.dropped_suffix << " suffix, "
              << stats.dropped_correction << " correction)\n";
}

int cmd_bars(const cli::RunConfig& cfg) {
    cfg.validate();
    std::vector<bars::Trade> raw = load_trades(cfg);
    bars::FilterStats stats;
    const std::vector<bars::Trade> kept =
        bars::filter_trades(raw, bars::FilterRules{}, &stats);
    if (kept.empty()) throw DataError("no trades survive the filters");
    const bars::SessionGrid grid = bars::grid_from_trades(kept);
    std::vector<bars::BarSeries> series;
    for (auto& [symbol, trades] : bars::group_by_symbol(kept))
        series.push_back(bars::aggregate(trades, grid));
    bars::write_bars_csv(out_path(cfg, "bars.csv"), series, cfg.hash());
    print_filter_stats(stats);
    std::cerr << "bars.csv: " << series.size() << " symbols, " << grid.n_bars()
              << " bars each\n";
    return 0;
}

int cmd_features(const cli::RunConfig& cfg) {
    cfg.validate();
    const auto meta =
        cfg.firms_path.empty() ? std::map<std::string, cli::FirmMeta>{}
                               : cli::read_firm_meta(cfg.firms_path);
    const cli::Panel panel = cli::build_panel(load_trades(cfg), cfg, meta);
    std::vector<features::FeatureFrame> frames;
    for (const network::FirmData& firm : panel.firms) frames.push_back(firm.features);
    features::write_features_csv(out_path(cfg, "features.csv"), frames, cfg.hash());
    print_filter_stats(panel.filter_stats);
    for (const cli::ScreenedFirm& s : panel.screened_out)
        std::cerr << "screened out " << s.symbol << ": " << s.reason << "\n";
    return 0;
}

int cmd_dataset(const cli::RunConfig& cfg, const std::string& target,
                const std::string& source) {
    cfg.validate();
    if (target.empty()) throw ConfigError("--target is required");
    const auto meta =
        cfg.firms_path.empty() ? std::map<std::string, cli::FirmMeta>{}
                               : cli::read_firm_meta(cfg.firms_path);
    const cli::Panel panel = cli::build_panel(load_trades(cfg), cfg, meta);

    const auto find = [&](const std::string& id) -> const network::FirmData& {
        for (const network::FirmData& f : panel.firms)
            if (f.id == id) return f;
        throw DataError("symbol " + id + " is not in the panel");
    };
    const network::FirmData& tgt = find(target);
    const features::FeatureFrame* cross = source.empty() ? nullptr : &find(source).features;

    measures::AssembleConfig ac;
    ac.horizon = cfg.horizon;
    ac.min_rows = cfg.min_rows;
    ac.lookback = cfg.lookback;
    ac.bvc_sigma_mode = cfg.sigma_mode;
    const measures::Dataset ds = measures::assemble(tgt.features, tgt.measures, panel.grid,
                                                    cross, cfg.measure_kind(), ac);
    const std::string stem =
        source.empty() ? "dataset_" + target : "dataset_" + target + "_" + source;
    measures::write_dataset_csv(out_path(cfg, stem + ".csv"), ds, cfg.hash());
    measures::write_task_json(out_path(cfg, stem + ".task.json"), ds);
    std::cerr << stem << ": " << ds.n_rows() << " rows, " << ds.n_features()
              << " features\n";
    return 0;
}

int cmd_edges(const cli::RunConfig& cfg) {
    cfg.validate();
    apply_jobs(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto meta =
        cfg.firms_path.empty() ? std::map<std::string, cli::FirmMeta>{}
                               : cli::read_firm_meta(cfg.firms_path);
    const cli::Panel panel = cli::build_panel(load_trades(cfg), cfg, meta);
    const network::PairwiseResult result =
        network::pairwise_edges(panel.firms, panel.grid, cfg.pairwise_config());

    cli::write_edges_csv(out_path(cfg, "edges.csv"), result, cfg.hash());
    cli::write_failures_csv(out_path(cfg, "failures.csv"), result.failures, cfg.hash());
    std::vector<std::pair<std::string, std::string>> inputs = {{"trades", cfg.trades_path}};
    if (!cfg.firms_path.empty()) inputs.push_back({"firms", cfg.firms_path});
    cli::write_manifest(out_path(cfg, "run_manifest.json"), cfg, inputs, &panel,
                        seconds_since(t0));
    std::cerr << "edges.csv: " << result.tests.size() << " pair tests, "
              << result.failures.size() << " failures\n";
    return 0;
}

int cmd_network(const cli::RunConfig& cfg) {
    cfg.validate();
    apply_jobs(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto meta =
        cfg.firms_path.empty() ? std::map<std::string, cli::FirmMeta>{}
                               : cli::read_firm_meta(cfg.firms_path);
    const cli::Panel panel = cli::build_panel(load_trades(cfg), cfg, meta);
    const network::PairwiseResult result =
        network::pairwise_edges(panel.firms, panel.grid, cfg.pairwise_config());
    const network::Network net =
        network::build_network(panel.firms, result, cfg.alpha, cfg.seed, cfg.hash());

    cli::write_edges_csv(out_path(cfg, "edges.csv"), result, cfg.hash());
    cli::write_failures_csv(out_path(cfg, "failures.csv"), result.failures, cfg.hash());
    network::write_network_json(out_path(cfg, "network.json"), net);
    network::write_dot(out_path(cfg, "network.dot"), net);
    network::write_graphml(out_path(cfg, "network.graphml"), net);
    network::write_degrees_csv(out_path(cfg, "degrees.csv"), network::degrees(net),
                               cfg.hash());

    network::DensityRow row;
    row.window_start = panel.grid.bar_start(0);
    row.window_end =
        panel.grid.bar_start(panel.grid.n_bars() - 1) + panel.grid.bar_width_ns;
    row.density = network::density(net);
    row.n_firms = static_cast<int>(net.nodes.size());
    row.n_edges = static_cast<int>(net.edges.size());
    network::write_density_csv(out_path(cfg, "density.csv"), {row}, cfg.hash());

    std::vector<std::pair<std::string, std::string>> inputs = {{"trades", cfg.trades_path}};
    if (!cfg.firms_path.empty()) inputs.push_back({"firms", cfg.firms_path});
    cli::write_manifest(out_path(cfg, "run_manifest.json"), cfg, inputs, &panel,
                        seconds_since(t0));
    std::cerr << "network.json: " << net.nodes.size() << " nodes, " << net.edges.size()
              << " edges, density " << format_double(row.density) << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ConfigError("report needs at least one network JSON");
    for (const std::string& path : paths) {
        const network::Network net = network::load_network(path);
        const network::DegreeReport deg = network::degrees(net);
        std::cout << path << ":\n";
        std::cout << "  nodes " << net.nodes.size() << ", edges " << net.edges.size()
                  << ", density " << format_double(network::density(net)) << ", alpha "
                  << format_double(net.alpha) << "\n";
        std::cout << "  seed " << net.seed << ", config " << net.config_hash << "\n";

        std::vector<size_t> order(deg.ids.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return deg.out_degree[a] != deg.out_degree[b]
                       ? deg.out_degree[a] > deg.out_degree[b]
                       : deg.ids[a] < deg.ids[b];
        });
        const size_t top = std::min<size_t>(3, order.size());
        for (size_t i = 0; i < top; ++i) {
            const size_t k = order[i];
            if (deg.out_degree[k] == 0) break;
            std::cout << "  hub " << deg.ids[k] << ": out " << deg.out_degree[k] << ", in "
                      << deg.in_degree[k] << "\n";
        }
    }
    return 0;
}

struct SynthOptions {
    int firms = 2;
    int days = 260;
    double trades_per_bar = 40.0;
    std::string start_date = "2024-01-02";
    uint64_t seed = 1;
    bool allow_empty = false;
    std::vector<std::string> influences;  // src>dst[:lag[:strength]]
    std::string out_dir = ".";
};

synth::InfluenceSpec parse_influence(const std::string& text) {
    synth::InfluenceSpec spec;
    const size_t gt = text.find('>');
    if (gt == std::string::npos)
        throw ConfigError("influence '" + text + "': want src>dst[:lag[:strength]]");
    try {
        spec.source = std::stoi(text.substr(0, gt));
        std::string rest = text.substr(gt + 1);
        size_t colon = rest.find(':');
        spec.target = std::stoi(rest.substr(0, colon));
        if (colon != std::string::npos) {
            rest = rest.substr(colon + 1);
            colon = rest.find(':');
            spec.lag = std::stoi(rest.substr(0, colon));
            if (colon != std::string::npos) spec.strength = std::stod(rest.substr(colon + 1));
        }
    } catch (const std::exception&) {
        throw ConfigError("influence '" + text + "': want src>dst[:lag[:strength]]");
    }
    return spec;
}

int cmd_synth(const SynthOptions& opt) {
    synth::SynthConfig sc;
    sc.n_firms = opt.firms;
    sc.days = opt.days;
    sc.trades_per_bar = opt.trades_per_bar;
    sc.start_date = opt.start_date;
    sc.seed = opt.seed;
    sc.allow_empty_bars = opt.allow_empty;
    for (const std::string& text : opt.influences)
        sc.influences.push_back(parse_influence(text));

    const synth::SynthResult res = synth::generate(sc);
    fs::create_directories(opt.out_dir);
    const auto at = [&](const std::string& name) {
        return (fs::path(opt.out_dir) / name).string();
    };
    bars::write_trades_csv(at("synth_trades.csv"), res.trades);
    synth::write_truth_json(at("synth_truth.json"), sc, res);
    {
        CsvWriter w(at("synth_firms.csv"));
        w.row({"symbol", "mcap"});
        for (size_t i = 0; i < res.symbols.size(); ++i)
            w.row({res.symbols[i], format_double(res.mcaps[i])});
    }
    std::cerr << "synth: " << res.trades.size() << " trades, " << res.symbols.size()
              << " firms, " << res.grid.trading_days.size() << " days\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"directed cross-predictability networks from high-frequency trades"};
    app.require_subcommand(1);

    cli::RunConfig cfg;
    std::string config_path, target, source;
    std::vector<std::string> report_paths;
    SynthOptions synth_opt;

    CLI::App* c_bars = app.add_subcommand("bars", "aggregate trades into session bars");
    CLI::App* c_features =
        app.add_subcommand("features", "microstructure features per firm and bar");
    CLI::App* c_dataset =
        app.add_subcommand("dataset", "labelled feature matrix for one prediction task");
    CLI::App* c_edges = app.add_subcommand("edges", "all pairwise cross-predictability tests");
    CLI::App* c_network =
        app.add_subcommand("network", "full pipeline: tests, FDR, network exports");
    CLI::App* c_report = app.add_subcommand("report", "summarize saved network JSON files");
    CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic trade tape");

    for (CLI::App* cmd : {c_bars, c_features, c_dataset, c_edges, c_network})
        add_run_options(cmd, cfg, config_path);
    c_dataset->add_option("--target", target, "target symbol (whose measure is predicted)");
    c_dataset->add_option("--source", source, "cross-firm symbol, omit for the own-feature task");
    c_report->add_option("files", report_paths, "network JSON files");

    c_synth->add_option("--firms", synth_opt.firms, "number of firms");
    c_synth->add_option("--days", synth_opt.days, "number of trading days");
    c_synth->add_option("--trades-per-bar", synth_opt.trades_per_bar, "Poisson mean per bar");
    c_synth->add_option("--start-date", synth_opt.start_date, "first trading day");
    c_synth->add_option("--seed", synth_opt.seed, "generator seed");
    c_synth->add_flag("--allow-empty-bars", synth_opt.allow_empty,
                      "let the Poisson draw produce empty bars");
    c_synth->add_option("--influence", synth_opt.influences,
                        "planted link src>dst[:lag[:strength]], repeatable");
    c_synth->add_option("--out-dir", synth_opt.out_dir, "output directory");

    try {
        preload_config(argc, argv, cfg);
        app.parse(argc, argv);
        if (c_bars->parsed()) return cmd_bars(cfg);
        if (c_features->parsed()) return cmd_features(cfg);
        if (c_dataset->parsed()) return cmd_dataset(cfg, target, source);
        if (c_edges->parsed()) return cmd_edges(cfg);
        if (c_network->parsed()) return cmd_network(cfg);
        if (c_report->parsed()) return cmd_report(report_paths);
        if (c_synth->parsed()) return cmd_synth(synth_opt);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const DegeneracyError& e) {
        std::cerr << "degenerate result: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
