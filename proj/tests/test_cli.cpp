// End-to-end tests that drive the installed binary the way a user would:
// every case shells out to the real executable and inspects the files it
// writes.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HFTNET_CLI_PATH;

int run(const std::string& args, const std::string& stdout_path = "") {
    std::string cmd = kCli + " " + args;
    if (!stdout_path.empty())
        cmd += " > " + stdout_path + " 2> /dev/null";
    else
        cmd += " > /dev/null 2> /dev/null";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

size_t count_lines(const std::string& text) {
    size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

// one small synthetic tape shared by every case
struct Fixture {
    fs::path dir;
    fs::path trades;
    fs::path firms;

    Fixture() {
        dir = fs::path("cli_scratch");
        fs::remove_all(dir);
        fs::create_directories(dir);
        const int rc = run("synth --firms 3 --days 30 --seed 5 --out-dir " +
                           (dir / "tape").string());
        REQUIRE(rc == 0);
        trades = dir / "tape" / "synth_trades.csv";
        firms = dir / "tape" / "synth_firms.csv";
        REQUIRE(fs::exists(trades));
        REQUIRE(fs::exists(firms));
        REQUIRE(fs::exists(dir / "tape" / "synth_truth.json"));
    }
};

const Fixture& fx() {
    static Fixture f;
    return f;
}

// small-run flags shared by the pipeline commands
std::string small_flags() {
    return " --lookback 20 --horizon 5 --min-rows 50 --trees 10 --boot 50"
           " --split chrono:frac=0.7 --seed 3";
}

}  // namespace

TEST_CASE("synth writes a loadable tape") {
    const std::string head = slurp(fx().trades).substr(0, 200);
    CHECK(head.rfind("symbol,timestamp,price,volume", 0) == 0);
    const std::string firms = slurp(fx().firms);
    CHECK(firms.rfind("symbol,mcap", 0) == 0);
    CHECK(firms.find("SYN00") != std::string::npos);
    CHECK(firms.find("SYN02") != std::string::npos);

    const nlohmann::json truth =
        nlohmann::json::parse(slurp(fx().dir / "tape" / "synth_truth.json"));
    CHECK(truth["n_firms"] == 3);
    CHECK(truth["days"] == 30);
    CHECK(truth["seed"] == 5);
}

TEST_CASE("synth accepts planted influences and rejects malformed ones") {
    const fs::path out = fx().dir / "tape_link";
    CHECK(run("synth --firms 2 --days 5 --seed 1 --influence '0>1:2:0.9' --out-dir " +
              out.string()) == 0);
    CHECK(fs::exists(out / "synth_truth.json"));
    const nlohmann::json truth = nlohmann::json::parse(slurp(out / "synth_truth.json"));
    REQUIRE(truth["influences"].size() == 1);
    CHECK(truth["influences"][0]["source"] == "SYN00");
    CHECK(truth["influences"][0]["target"] == "SYN01");
    CHECK(truth["influences"][0]["lag"] == 2);
    CHECK(truth["influences"][0]["strength"] == 0.9);

    CHECK(run("synth --firms 2 --days 5 --influence garbage --out-dir " + out.string()) == 2);
    CHECK(run("synth --firms 2 --days 5 --influence '0>0' --out-dir " + out.string()) == 2);
}

TEST_CASE("bars aggregates the tape") {
    const fs::path out = fx().dir / "bars_out";
    REQUIRE(run("bars --trades " + fx().trades.string() + " --out-dir " + out.string()) == 0);
    const std::string csv = slurp(out / "bars.csv");
    CHECK(csv.rfind("# manifest=", 0) == 0);
    CHECK(csv.find("symbol,date,slot_start,open,close,volume,dollar_volume") !=
          std::string::npos);
    // 3 firms x 30 days x 12 kept bars, plus comment and header
    CHECK(count_lines(csv) == 3 * 30 * 12 + 2);
}

TEST_CASE("features writes one row per firm and bar") {
    const fs::path out = fx().dir / "feat_out";
    REQUIRE(run("features --trades " + fx().trades.string() + " --lookback 20 --out-dir " +
                out.string()) == 0);
    const std::string csv = slurp(out / "features.csv");
    CHECK(csv.find("symbol,bar_index,roll,roll_impact,kyle,amihud,vpin") != std::string::npos);
    CHECK(count_lines(csv) == 3 * 30 * 12 + 2);
}

TEST_CASE("dataset emits the matrix and task description") {
    const fs::path out = fx().dir / "ds_out";
    REQUIRE(run("dataset --trades " + fx().trades.string() + small_flags() +
                " --target SYN00 --out-dir " + out.string()) == 0);
    const std::string csv = slurp(out / "dataset_SYN00.csv");
    CHECK(csv.find("bar_index,timestamp,label,roll,roll_impact,kyle,amihud,vpin") !=
          std::string::npos);
    const nlohmann::json task =
        nlohmann::json::parse(slurp(out / "dataset_SYN00.task.json"));
    CHECK(task["target"] == "SYN00");
    CHECK(task["cross"] == "");
    CHECK(task["measure"] == "vol");
    CHECK(task["lookback"] == 20);
    CHECK(task["horizon"] == 5);
    // comment + header + one line per row
    CHECK(count_lines(csv) == task["rows"].get<size_t>() + 2);

    // cross task appends the source firm's features
    REQUIRE(run("dataset --trades " + fx().trades.string() + small_flags() +
                " --target SYN00 --source SYN01 --out-dir " + out.string()) == 0);
    const std::string cross_csv = slurp(out / "dataset_SYN00_SYN01.csv");
    CHECK(cross_csv.find("vpin,roll.x,roll_impact.x,kyle.x,amihud.x,vpin.x") !=
          std::string::npos);
    const nlohmann::json cross_task =
        nlohmann::json::parse(slurp(out / "dataset_SYN00_SYN01.task.json"));
    CHECK(cross_task["cross"] == "SYN01");
    CHECK(cross_task["features"].size() == 10);

    CHECK(run("dataset --trades " + fx().trades.string() + small_flags() +
              " --target NOPE --out-dir " + out.string()) == 3);
}

TEST_CASE("edges runs every ordered pair") {
    const fs::path out = fx().dir / "edges_out";
    REQUIRE(run("edges --trades " + fx().trades.string() + small_flags() + " --out-dir " +
                out.string()) == 0);
    const std::string csv = slurp(out / "edges.csv");
    CHECK(csv.find("source,target,auc1,auc2,diff,p,p_adj,n_test") != std::string::npos);
    CHECK(count_lines(csv) == 6 + 2);  // 3 firms -> 6 ordered pairs
    CHECK(count_lines(slurp(out / "failures.csv")) == 2);  // header only

    const nlohmann::json manifest =
        nlohmann::json::parse(slurp(out / "run_manifest.json"));
    CHECK(manifest["tool"] == "hftnet");
    CHECK(manifest["config"]["trees"] == 10);
    CHECK(manifest["config"]["split"] == "chrono:frac=0.7");
    CHECK(manifest["panel"]["n_firms"] == 3);
    CHECK(manifest["panel"]["trading_days"] == 30);
    CHECK(manifest["inputs"][0]["role"] == "trades");
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("network emits every artifact and is reproducible") {
    const fs::path out1 = fx().dir / "net1";
    const fs::path out2 = fx().dir / "net2";
    REQUIRE(run("network --trades " + fx().trades.string() + " --firms " +
                fx().firms.string() + small_flags() + " --out-dir " + out1.string()) == 0);
    for (const char* name : {"edges.csv", "failures.csv", "network.json", "network.dot",
                             "network.graphml", "degrees.csv", "density.csv",
                             "run_manifest.json"})
        CHECK(fs::exists(out1 / name));

    const nlohmann::json net = nlohmann::json::parse(slurp(out1 / "network.json"));
    CHECK(net["nodes"].size() == 3);
    CHECK(net["alpha"] == 0.05);
    CHECK(net["seed"] == 3);
    // firm metadata flows into the nodes
    CHECK(net["nodes"][0]["id"] == "SYN00");
    CHECK(net["nodes"][0].contains("mcap"));
    const nlohmann::json manifest =
        nlohmann::json::parse(slurp(out1 / "run_manifest.json"));
    CHECK(net["config_hash"] == manifest["config_hash"]);

    const std::string degrees = slurp(out1 / "degrees.csv");
    CHECK(degrees.find("symbol,in_degree,out_degree") != std::string::npos);
    const std::string density = slurp(out1 / "density.csv");
    CHECK(density.find("window_start,window_end,density,n_firms,n_edges") !=
          std::string::npos);

    // byte-identical outputs on a rerun with the same seed
    REQUIRE(run("network --trades " + fx().trades.string() + " --firms " +
                fx().firms.string() + small_flags() + " --out-dir " + out2.string()) == 0);
    CHECK(slurp(out1 / "network.json") == slurp(out2 / "network.json"));
    CHECK(slurp(out1 / "edges.csv") == slurp(out2 / "edges.csv"));
}

TEST_CASE("config file merges under command-line flags") {
    const fs::path out = fx().dir / "cfg_out";
    const fs::path cfg_path = fx().dir / "run.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << "{\"trees\": 7, \"boot\": 44, \"seed\": 9, \"split\": \"chrono:frac=0.7\","
            << " \"lookback\": 20, \"horizon\": 5, \"min_rows\": 50}\n";
    }
    REQUIRE(run("edges --config " + cfg_path.string() + " --trades " + fx().trades.string() +
                " --boot 55 --out-dir " + out.string()) == 0);
    const nlohmann::json manifest =
        nlohmann::json::parse(slurp(out / "run_manifest.json"));
    CHECK(manifest["config"]["trees"] == 7);   // from the file
    CHECK(manifest["config"]["boot"] == 55);   // flag wins
    CHECK(manifest["config"]["seed"] == 9);

    // a missing config file is a usage problem, not a data problem
    CHECK(run("edges --config no_such_config.json --trades " + fx().trades.string()) == 2);
}

TEST_CASE("report summarizes saved networks") {
    const fs::path net_path = fx().dir / "net1" / "network.json";
    REQUIRE(fs::exists(net_path));  // produced by the network case
    const fs::path txt = fx().dir / "report.txt";
    REQUIRE(run("report " + net_path.string(), txt.string()) == 0);
    const std::string report = slurp(txt);
    CHECK(report.find(net_path.string()) != std::string::npos);
    CHECK(report.find("nodes 3") != std::string::npos);
    CHECK(report.find("density") != std::string::npos);

    CHECK(run("report no_such_network.json") == 3);
    CHECK(run("report") == 2);
}

TEST_CASE("usage errors exit with the config code") {
    CHECK(run("") == 2);                       // subcommand required
    CHECK(run("bars") == 2);                   // --trades missing
    CHECK(run("dataset --trades " + fx().trades.string()) == 2);  // --target missing
    CHECK(run("network --trades " + fx().trades.string() + " --split nonsense") == 2);
    CHECK(run("bars --trades no_such_trades.csv") == 3);
}
