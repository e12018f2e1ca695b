#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hftnet/bars.hpp"
#include "hftnet/cli.hpp"
#include "hftnet/eval.hpp"
#include "hftnet/features.hpp"
#include "hftnet/forest.hpp"
#include "hftnet/measures.hpp"
#include "hftnet/network.hpp"
#include "hftnet/rng.hpp"
#include "hftnet/synth.hpp"

using namespace hftnet;

namespace {

double time_of(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const std::string& name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  results %s\n",
                name.c_str(), serial_s, parallel_s, serial_s / parallel_s,
                identical ? "identical" : "DIFFER");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both columns run serial code\n");
#endif

    synth::SynthConfig sc;
    sc.n_firms = 4;
    sc.days = 220;
    sc.seed = 7;
    const synth::SynthResult synth_res = synth::generate(sc);

    cli::RunConfig rc;
    rc.trees = 400;
    rc.boot = 2000;
    rc.min_rows = 100;
    std::map<std::string, cli::FirmMeta> meta;
    cli::Panel panel = cli::build_panel(synth_res.trades, rc, meta);
    const bars::BarSeries& series = panel.series.front();

    {
        features::FeatureConfig fc;
        features::FeatureFrame serial_frame, parallel_frame;
        const double ts = time_of([&] {
            for (int i = 0; i < 20; ++i) serial_frame = features::compute_frame_serial(series, fc);
        });
        const double tp = time_of([&] {
            for (int i = 0; i < 20; ++i) parallel_frame = features::compute_frame(series, fc);
        });
        bool same = true;
        for (int c = 0; c < features::kFeatureCount && same; ++c)
            same = serial_frame.column(c) == parallel_frame.column(c);
        report("compute_frame x20", ts, tp, same);
    }

    measures::AssembleConfig ac;
    ac.min_rows = 100;
    const measures::Dataset ds =
        measures::assemble(panel.firms[0].features, panel.firms[0].measures, panel.grid,
                           &panel.firms[1].features, measures::MeasureKind::realized_volatility,
                           ac);

    forest::ForestModel serial_model, parallel_model;
    {
        forest::ForestConfig fc;
        fc.n_trees = 400;
        fc.seed = 11;
        const double ts = time_of([&] { serial_model = forest::fit_forest_serial(ds, fc); });
        const double tp = time_of([&] { parallel_model = forest::fit_forest(ds, fc); });
        report("fit_forest K=400", ts, tp,
               forest::to_json(serial_model) == forest::to_json(parallel_model));
    }

    {
        const forest::ColumnsView cols = forest::view_of(ds);
        const std::vector<double> p2 = forest::predict_proba(parallel_model, cols);
        std::vector<double> p1(p2.size());
        Rng rng(3);
        for (size_t i = 0; i < p1.size(); ++i) p1[i] = 0.5 + 0.1 * (rng.uniform() - 0.5);
        eval::BootstrapConfig bc;
        bc.b = 2000;
        bc.seed = 13;
        eval::AucTestResult serial_res, parallel_res;
        const double ts = time_of(
            [&] { serial_res = eval::bootstrap_auc_test_serial(p1, p2, ds.labels, bc); });
        const double tp =
            time_of([&] { parallel_res = eval::bootstrap_auc_test(p1, p2, ds.labels, bc); });
        report("bootstrap_auc_test B=2000", ts, tp,
               serial_res.p_value == parallel_res.p_value && serial_res.s == parallel_res.s);
    }

    {
        network::PairwiseConfig pc;
        pc.assemble.min_rows = 100;
        pc.forest.n_trees = 120;
        pc.bootstrap_b = 400;
        pc.seed = 17;
        network::PairwiseResult serial_res, parallel_res;
        network::PairwiseConfig pc_serial = pc;
        pc_serial.parallel = false;
        const double ts = time_of(
            [&] { serial_res = network::pairwise_edges(panel.firms, panel.grid, pc_serial); });
        const double tp = time_of(
            [&] { parallel_res = network::pairwise_edges(panel.firms, panel.grid, pc); });
        bool same = serial_res.tests.size() == parallel_res.tests.size();
        for (size_t i = 0; same && i < serial_res.tests.size(); ++i)
            same = serial_res.tests[i].p == parallel_res.tests[i].p &&
                   serial_res.tests[i].auc2 == parallel_res.tests[i].auc2;
        report("pairwise_edges 4 firms", ts, tp, same);
    }
    return 0;
}
