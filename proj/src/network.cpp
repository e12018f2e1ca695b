#include "hftnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"
#include "hftnet/rng.hpp"
#include "hftnet/stats.hpp"
#include "hftnet/timeutil.hpp"

#include <json.hpp>

namespace hftnet::network {

namespace {

// stream-class tags for deriving independent sub-seeds from the run seed
constexpr uint64_t kTagOwnModel = 0x6f776e;
constexpr uint64_t kTagPairModel = 0x70616972;
constexpr uint64_t kTagBootstrap = 0x626f6f74;

uint64_t chain(uint64_t seed, uint64_t v) { return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL)); }

uint64_t sub_seed(uint64_t master, uint64_t a, uint64_t b, uint64_t c = 0) {
    return chain(chain(chain(master, a), b), c);
}

struct TargetState {
    bool ok = false;
    std::string reason;
    measures::Dataset own;
    std::vector<forest::ForestModel> fold_models;
};

}  // namespace

PairwiseResult pairwise_edges(const std::vector<FirmData>& firms,
                              const bars::SessionGrid& grid, const PairwiseConfig& cfg) {
    const size_t n = firms.size();
    if (n < 2) throw ConfigError("pairwise edges need at least two firms");
    {
        std::unordered_set<std::string> seen;
        for (const FirmData& f : firms)
            if (!seen.insert(f.id).second)
                throw ConfigError("duplicate firm id '" + f.id + "'");
    }
    if (cfg.bootstrap_b < 2) throw ConfigError("bootstrap replicate count must be at least 2");

    const TimestampNs span_start = grid.bar_start(0);
    const TimestampNs span_end =
        grid.bar_start(grid.n_bars() - 1) + grid.bar_width_ns;

    PairwiseResult out;
    out.n_firms = static_cast<int>(n);

    // One model per (target, fold) on the target's own features; shared
    // across every source because fold boundaries come from the grid span.
    std::vector<TargetState> targets(n);
    for (size_t j = 0; j < n; ++j) {
        TargetState& st = targets[j];
        try {
            st.own = measures::assemble(firms[j].features, firms[j].measures, grid, nullptr,
                                        cfg.measure, cfg.assemble);
            const eval::SplitPlan plan =
                eval::make_splits(st.own.timestamps, cfg.split, span_start, span_end);
            for (size_t f = 0; f < plan.folds.size(); ++f) {
                forest::ForestConfig fc = cfg.forest;
                fc.seed = sub_seed(cfg.seed, kTagOwnModel, j, f);
                st.fold_models.push_back(cfg.parallel
                                             ? forest::fit_forest_rows(st.own, plan.folds[f].train, fc)
                                             : forest::fit_forest_rows_serial(
                                                   st.own, plan.folds[f].train, fc));
            }
            st.ok = true;
        } catch (const DataError& e) {
            st.reason = e.what();
        } catch (const DegeneracyError& e) {
            st.reason = e.what();
        }
        if (!st.ok) out.failures.push_back({"", firms[j].id, st.reason});
    }

    struct PairSlot {
        bool tested = false;
        bool failed = false;
        EdgeResult edge;
        std::string reason;
    };
    std::vector<std::pair<size_t, size_t>> pairs;  // (source, target)
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (i != j && targets[j].ok) pairs.push_back({i, j});
    std::vector<PairSlot> slots(pairs.size());

    const int64_t n_pairs = static_cast<int64_t>(pairs.size());
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int64_t q = 0; q < n_pairs; ++q) {
        const auto [i, j] = pairs[static_cast<size_t>(q)];
        PairSlot& slot = slots[static_cast<size_t>(q)];
        const uint64_t pair_tag = static_cast<uint64_t>(i) * n + j;
        try {
            const measures::Dataset ds = measures::assemble(
                firms[j].features, firms[j].measures, grid, &firms[i].features, cfg.measure,
                cfg.assemble);
            const eval::SplitPlan plan =
                eval::make_splits(ds.timestamps, cfg.split, span_start, span_end);

            const forest::ColumnsView full = forest::view_of(ds);
            const forest::ColumnsView own_cols(full.begin(),
                                               full.begin() + features::kFeatureCount);
            std::vector<double> p1, p2;
            std::vector<int8_t> lab;
            for (size_t f = 0; f < plan.folds.size(); ++f) {
                const eval::Fold& fold = plan.folds[f];
                forest::ForestConfig fc = cfg.forest;
                fc.seed = sub_seed(cfg.seed, kTagPairModel, pair_tag, f);
                const forest::ForestModel m2 =
                    forest::fit_forest_rows_serial(ds, fold.train, fc);
                // Per-fold models are calibrated differently; rank-normalize
                // each fold's scores before pooling so the pooled AUC compares
                // discrimination, not fold-level score offsets.
                const std::vector<double> pred2 =
                    eval::rank_unit_scores(forest::predict_proba_rows(m2, full, fold.test));
                const std::vector<double> pred1 = eval::rank_unit_scores(
                    forest::predict_proba_rows(targets[j].fold_models[f], own_cols, fold.test));
                p1.insert(p1.end(), pred1.begin(), pred1.end());
                p2.insert(p2.end(), pred2.begin(), pred2.end());
                for (size_t r : fold.test) lab.push_back(ds.labels[r]);
            }

            eval::BootstrapConfig bc;
            bc.b = cfg.bootstrap_b;
            bc.seed = sub_seed(cfg.seed, kTagBootstrap, pair_tag);
            const eval::AucTestResult t = eval::bootstrap_auc_test_serial(p1, p2, lab, bc);

            slot.edge.source = firms[i].id;
            slot.edge.target = firms[j].id;
            slot.edge.auc1 = t.auc1;
            slot.edge.auc2 = t.auc2;
            slot.edge.diff = t.diff;
            slot.edge.p = t.p_value;
            slot.edge.p_adj = t.p_value;
            slot.edge.n_test = static_cast<int64_t>(lab.size());
            slot.edge.degenerate_s = t.degenerate_s;
            slot.tested = true;
        } catch (const DataError& e) {
            slot.failed = true;
            slot.reason = e.what();
        } catch (const DegeneracyError& e) {
            slot.failed = true;
            slot.reason = e.what();
        }
    }

    for (size_t q = 0; q < pairs.size(); ++q) {
        const auto [i, j] = pairs[q];
        if (slots[q].tested)
            out.tests.push_back(std::move(slots[q].edge));
        else if (slots[q].failed)
            out.failures.push_back({firms[i].id, firms[j].id, slots[q].reason});
    }
    std::sort(out.tests.begin(), out.tests.end(), [](const EdgeResult& a, const EdgeResult& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    apply_bh(out);
    return out;
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
    const size_t m = p_values.size();
    std::vector<double> adj(m);
    if (m == 0) return adj;
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw DataError("bh: p-value outside [0,1]");

    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return p_values[a] != p_values[b] ? p_values[a] < p_values[b] : a < b;
    });
    double running = 1.0;
    for (size_t r = m; r-- > 0;) {
        const size_t i = order[r];
        running = std::min(running,
                           p_values[i] * static_cast<double>(m) / static_cast<double>(r + 1));
        adj[i] = running;
    }
    return adj;
}

void apply_bh(PairwiseResult& result) {
    std::vector<double> p;
    p.reserve(result.tests.size());
    for (const EdgeResult& t : result.tests) p.push_back(t.p);
    const std::vector<double> adj = bh_adjust(p);
    for (size_t i = 0; i < adj.size(); ++i) result.tests[i].p_adj = adj[i];
}

Network build_network(const std::vector<FirmData>& firms, const PairwiseResult& result,
                      double alpha, uint64_t seed, const std::string& config_hash) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    Network net;
    net.alpha = alpha;
    net.seed = seed;
    net.config_hash = config_hash;
    for (const FirmData& f : firms) net.nodes.push_back({f.id, f.mcap, f.sector});
    for (const EdgeResult& t : result.tests)
        if (t.p_adj <= alpha) net.edges.push_back(t);
    std::sort(net.edges.begin(), net.edges.end(), [](const EdgeResult& a, const EdgeResult& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    return net;
}

double density(const Network& net) {
    const size_t n = net.nodes.size();
    if (n < 2) return 0.0;
    return static_cast<double>(net.edges.size()) /
           (static_cast<double>(n) * static_cast<double>(n - 1));
}

DegreeReport degrees(const Network& net) {
    DegreeReport rep;
    std::unordered_map<std::string, size_t> index;
    for (const NodeInfo& node : net.nodes) {
        index[node.id] = rep.ids.size();
        rep.ids.push_back(node.id);
    }
    rep.in_degree.assign(rep.ids.size(), 0);
    rep.out_degree.assign(rep.ids.size(), 0);
    for (const EdgeResult& e : net.edges) {
        const auto src = index.find(e.source);
        const auto dst = index.find(e.target);
        if (src == index.end() || dst == index.end())
            throw DataError("edge endpoint missing from node list");
        rep.out_degree[src->second]++;
        rep.in_degree[dst->second]++;
    }

    auto standardize = [](const std::vector<int>& deg, std::vector<double>& out, bool& flag) {
        out.assign(deg.size(), 0.0);
        if (deg.size() < 2) {
            flag = true;
            return;
        }
        std::vector<double> v(deg.begin(), deg.end());
        const double m = stats::mean(v);
        const double sd = stats::sample_sd(v);
        if (sd == 0.0) {
            flag = true;
            return;
        }
        for (size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / sd;
    };
    standardize(rep.in_degree, rep.in_std, rep.in_degenerate);
    standardize(rep.out_degree, rep.out_std, rep.out_degenerate);
    return rep;
}

Network subnetwork(const Network& net, const std::vector<std::string>& ids) {
    std::unordered_set<std::string> keep(ids.begin(), ids.end());
    std::unordered_set<std::string> known;
    for (const NodeInfo& node : net.nodes) known.insert(node.id);
    for (const std::string& id : ids)
        if (!known.count(id)) throw ConfigError("subnetwork: unknown node '" + id + "'");

    Network sub;
    sub.alpha = net.alpha;
    sub.seed = net.seed;
    sub.config_hash = net.config_hash;
    for (const NodeInfo& node : net.nodes)
        if (keep.count(node.id)) sub.nodes.push_back(node);
    for (const EdgeResult& e : net.edges)
        if (keep.count(e.source) && keep.count(e.target)) sub.edges.push_back(e);
    return sub;
}

std::vector<double> value_weighted_series(const std::vector<std::span<const double>>& series,
                                          std::span<const double> weights) {
    if (series.size() != weights.size())
        throw DataError("value weighting: series and weight counts differ");
    if (series.empty()) throw DataError("value weighting: no series");
    const size_t len = series.front().size();
    for (const auto& s : series)
        if (s.size() != len) throw DataError("value weighting: series lengths differ");

    std::vector<double> out(len, missing());
    for (size_t t = 0; t < len; ++t) {
        double acc = 0.0, wsum = 0.0;
        for (size_t i = 0; i < series.size(); ++i) {
            const double v = series[i][t];
            const double w = weights[i];
            if (is_missing(v) || !(w > 0.0) || is_missing(w)) continue;
            acc += w * v;
            wsum += w;
        }
        if (wsum > 0.0) out[t] = acc / wsum;
    }
    return out;
}

SizeGroups split_by_mcap(std::span<const double> mcaps) {
    SizeGroups groups;
    std::vector<size_t> valid;
    for (size_t i = 0; i < mcaps.size(); ++i)
        (is_missing(mcaps[i]) ? groups.unknown : valid).push_back(i);
    if (valid.empty()) return groups;

    std::vector<size_t> order = valid;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return mcaps[a] != mcaps[b] ? mcaps[a] < mcaps[b] : a < b;
    });
    const size_t k = order.size();
    const double median = k % 2 == 1 ? mcaps[order[k / 2]]
                                     : 0.5 * (mcaps[order[k / 2 - 1]] + mcaps[order[k / 2]]);
    for (size_t i : valid) (mcaps[i] <= median ? groups.small : groups.large).push_back(i);
    return groups;
}

namespace {

nlohmann::ordered_json edge_to_json(const EdgeResult& e) {
    nlohmann::ordered_json j;
    j["src"] = e.source;
    j["dst"] = e.target;
    j["auc1"] = e.auc1;
    j["auc2"] = e.auc2;
    j["diff"] = e.diff;
    j["p"] = e.p;
    j["p_adj"] = e.p_adj;
    return j;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string to_json(const Network& net) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const NodeInfo& node : net.nodes) {
        nlohmann::ordered_json nj;
        nj["id"] = node.id;
        if (!is_missing(node.mcap)) nj["mcap"] = node.mcap;
        if (!node.sector.empty()) nj["sector"] = node.sector;
        j["nodes"].push_back(std::move(nj));
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const EdgeResult& e : net.edges) j["edges"].push_back(edge_to_json(e));
    j["alpha"] = net.alpha;
    j["seed"] = net.seed;
    j["config_hash"] = net.config_hash;
    return j.dump(2) + "\n";
}

void write_network_json(const std::string& path, const Network& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << to_json(net);
}

Network network_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Network net;
    for (const auto& nj : j.at("nodes")) {
        NodeInfo node;
        node.id = nj.at("id").get<std::string>();
        if (nj.contains("mcap")) node.mcap = nj["mcap"].get<double>();
        if (nj.contains("sector")) node.sector = nj["sector"].get<std::string>();
        net.nodes.push_back(std::move(node));
    }
    for (const auto& ej : j.at("edges")) {
        EdgeResult e;
        e.source = ej.at("src").get<std::string>();
        e.target = ej.at("dst").get<std::string>();
        e.auc1 = ej.at("auc1").get<double>();
        e.auc2 = ej.at("auc2").get<double>();
        e.diff = ej.at("diff").get<double>();
        e.p = ej.at("p").get<double>();
        e.p_adj = ej.at("p_adj").get<double>();
        net.edges.push_back(std::move(e));
    }
    net.alpha = j.at("alpha").get<double>();
    net.seed = j.at("seed").get<uint64_t>();
    net.config_hash = j.at("config_hash").get<std::string>();
    return net;
}

Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return network_from_json(buf.str());
}

std::string to_dot(const Network& net) {
    std::string out = "digraph cross_predictability {\n";
    for (const NodeInfo& node : net.nodes) out += "  \"" + dot_escape(node.id) + "\";\n";
    for (const EdgeResult& e : net.edges) {
        out += "  \"" + dot_escape(e.source) + "\" -> \"" + dot_escape(e.target) +
               "\" [weight=" + format_double(e.diff) + ", p_adj=" + format_double(e.p_adj) +
               "];\n";
    }
    out += "}\n";
    return out;
}

std::string to_graphml(const Network& net) {
    std::string out =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        "  <key id=\"mcap\" for=\"node\" attr.name=\"mcap\" attr.type=\"double\"/>\n"
        "  <key id=\"sector\" for=\"node\" attr.name=\"sector\" attr.type=\"string\"/>\n"
        "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
        "  <key id=\"p_adj\" for=\"edge\" attr.name=\"p_adj\" attr.type=\"double\"/>\n"
        "  <graph id=\"G\" edgedefault=\"directed\">\n";
    for (const NodeInfo& node : net.nodes) {
        out += "    <node id=\"" + xml_escape(node.id) + "\"";
        if (is_missing(node.mcap) && node.sector.empty()) {
            out += "/>\n";
            continue;
        }
        out += ">\n";
        if (!is_missing(node.mcap))
            out += "      <data key=\"mcap\">" + format_double(node.mcap) + "</data>\n";
        if (!node.sector.empty())
            out += "      <data key=\"sector\">" + xml_escape(node.sector) + "</data>\n";
        out += "    </node>\n";
    }
    for (const EdgeResult& e : net.edges) {
        out += "    <edge source=\"" + xml_escape(e.source) + "\" target=\"" +
               xml_escape(e.target) + "\">\n";
        out += "      <data key=\"weight\">" + format_double(e.diff) + "</data>\n";
        out += "      <data key=\"p_adj\">" + format_double(e.p_adj) + "</data>\n";
        out += "    </edge>\n";
    }
    out += "  </graph>\n</graphml>\n";
    return out;
}

void write_dot(const std::string& path, const Network& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << to_dot(net);
}

void write_graphml(const std::string& path, const Network& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << to_graphml(net);
}

void write_degrees_csv(const std::string& path, const DegreeReport& report,
                       const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"symbol", "in_degree", "out_degree", "in_degree_std", "out_degree_std"});
    for (size_t i = 0; i < report.ids.size(); ++i)
        w.row({report.ids[i], std::to_string(report.in_degree[i]),
               std::to_string(report.out_degree[i]), format_double(report.in_std[i]),
               format_double(report.out_std[i])});
}

void write_density_csv(const std::string& path, const std::vector<DensityRow>& rows,
                       const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"window_start", "window_end", "density", "n_firms", "n_edges"});
    for (const DensityRow& r : rows)
        w.row({format_timestamp(r.window_start), format_timestamp(r.window_end),
               format_double(r.density), std::to_string(r.n_firms),
               std::to_string(r.n_edges)});
}

}  // namespace hftnet::network
