#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hftnet/common.hpp"
#include "hftnet/synth.hpp"
#include "hftnet/timeutil.hpp"

#include <json.hpp>

using namespace hftnet;
using namespace hftnet::synth;

namespace {

SynthConfig small_config(uint64_t seed, int firms = 3, int days = 30) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.n_firms = firms;
    cfg.days = days;
    return cfg;
}

double state_fraction(const std::vector<uint8_t>& v) {
    int64_t s = 0;
    for (uint8_t x : v) s += x;
    return static_cast<double>(s) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("generation is deterministic in the config") {
    const SynthConfig cfg = small_config(5);
    const SynthResult a = generate(cfg);
    const SynthResult b = generate(cfg);

    CHECK(a.symbols == b.symbols);
    CHECK(a.mcaps == b.mcaps);
    CHECK(a.grid.trading_days == b.grid.trading_days);
    CHECK(a.vol_state == b.vol_state);
    CHECK(a.flow_state == b.flow_state);
    CHECK(a.ofi == b.ofi);
    REQUIRE(a.trades.size() == b.trades.size());
    for (size_t i = 0; i < a.trades.size(); ++i) {
        CHECK(a.trades[i].symbol == b.trades[i].symbol);
        CHECK(a.trades[i].timestamp == b.trades[i].timestamp);
        CHECK(a.trades[i].price == b.trades[i].price);
        CHECK(a.trades[i].volume == b.trades[i].volume);
    }

    // a different seed moves the tape
    const SynthResult c = generate(small_config(6));
    CHECK(a.vol_state != c.vol_state);
}

TEST_CASE("firms are generated on independent streams") {
    const SynthResult two = generate(small_config(9, 2));
    const SynthResult three = generate(small_config(9, 3));
    // adding a firm leaves the existing firms' truth paths untouched
    for (size_t i = 0; i < 2; ++i) {
        CHECK(two.vol_state[i] == three.vol_state[i]);
        CHECK(two.flow_state[i] == three.flow_state[i]);
        CHECK(two.ofi[i] == three.ofi[i]);
    }
}

TEST_CASE("planted influence shifts only the target's volatility regime") {
    SynthConfig base = small_config(21, 2, 130);
    base.influence_gain = 0.5;
    SynthConfig linked = base;
    linked.influences.push_back({0, 1, 2, 1.0});

    const SynthResult off = generate(base);
    const SynthResult on = generate(linked);

    // the source firm and every flow path are identical
    CHECK(off.vol_state[0] == on.vol_state[0]);
    CHECK(off.flow_state == on.flow_state);
    CHECK(off.ofi == on.ofi);

    // the target's regime path moves, and spends more time stressed
    CHECK(off.vol_state[1] != on.vol_state[1]);
    const double f_off = state_fraction(off.vol_state[1]);
    const double f_on = state_fraction(on.vol_state[1]);
    CHECK(f_on > f_off + 0.05);
}

TEST_CASE("influence acts with its lag") {
    SynthConfig base = small_config(33, 2, 60);
    base.influence_gain = 0.5;
    SynthConfig linked = base;
    const int lag = 50;
    linked.influences.push_back({0, 1, lag, 1.0});

    const SynthResult off = generate(base);
    const SynthResult on = generate(linked);
    // before the first lagged imbalance is visible the paths must agree
    for (int s = 0; s < lag; ++s)
        CHECK(off.vol_state[1][static_cast<size_t>(s)] ==
              on.vol_state[1][static_cast<size_t>(s)]);
    CHECK(off.vol_state[1] != on.vol_state[1]);
}

TEST_CASE("config validation") {
    auto reject = [](auto mutate) {
        SynthConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    };
    reject([](SynthConfig& c) { c.n_firms = 0; });
    reject([](SynthConfig& c) { c.days = 0; });
    reject([](SynthConfig& c) { c.trades_per_bar = 0.0; });
    reject([](SynthConfig& c) { c.base_price_low = 200.0; });  // low >= high
    reject([](SynthConfig& c) { c.calm_vol = 0.0; });
    reject([](SynthConfig& c) { c.vol_entry_hazard = 1.0; });
    reject([](SynthConfig& c) { c.flow_exit_hazard = -0.1; });
    reject([](SynthConfig& c) { c.hot_flow_bias = 1.0; });
    reject([](SynthConfig& c) { c.flow_return_weight = 1.5; });
    reject([](SynthConfig& c) { c.hot_volume_boost = 0.9; });
    reject([](SynthConfig& c) { c.influence_gain = -0.1; });
    reject([](SynthConfig& c) { c.influences.push_back({0, 0, 1, 1.0}); });
    reject([](SynthConfig& c) { c.influences.push_back({0, 5, 1, 1.0}); });
    reject([](SynthConfig& c) { c.influences.push_back({-1, 1, 1, 1.0}); });
    reject([](SynthConfig& c) { c.influences.push_back({0, 1, 0, 1.0}); });
    reject([](SynthConfig& c) { c.influences.push_back({0, 1, 1, -0.5}); });
    reject([](SynthConfig& c) { c.start_date = "garbage"; });
    SynthConfig ok;
    ok.n_firms = 2;
    ok.influences.push_back({0, 1, 1, 1.0});
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("grid covers exactly the requested weekdays") {
    SynthConfig cfg = small_config(1, 1, 5);
    cfg.start_date = "2024-01-05";  // a Friday
    const SynthResult r = generate(cfg);
    const std::vector<int64_t> want{
        days_from_civil(2024, 1, 5), days_from_civil(2024, 1, 8), days_from_civil(2024, 1, 9),
        days_from_civil(2024, 1, 10), days_from_civil(2024, 1, 11)};
    CHECK(r.grid.trading_days == want);

    // a weekend start rolls forward to Monday
    cfg.start_date = "2024-01-06";
    const SynthResult r2 = generate(cfg);
    CHECK(r2.grid.trading_days.front() == days_from_civil(2024, 1, 8));

    CHECK(r.grid.raw_slots_per_day() == 13);
    CHECK(r.raw_slots() == 13 * 5);
    CHECK(r.grid.n_bars() == 12 * 5);  // warmup slot dropped from the kept grid
}

TEST_CASE("truth arrays, symbols and mcaps have the documented shape") {
    const SynthConfig cfg = small_config(3, 4, 10);
    const SynthResult r = generate(cfg);

    CHECK(r.symbols == std::vector<std::string>{"SYN00", "SYN01", "SYN02", "SYN03"});
    REQUIRE(r.mcaps.size() == 4);
    for (size_t i = 0; i < 4; ++i)
        CHECK(r.mcaps[i] == 5e8 * std::pow(1.9, static_cast<double>(i)));

    REQUIRE(r.vol_state.size() == 4);
    REQUIRE(r.flow_state.size() == 4);
    REQUIRE(r.ofi.size() == 4);
    const size_t slots = static_cast<size_t>(r.raw_slots());
    for (size_t i = 0; i < 4; ++i) {
        CHECK(r.vol_state[i].size() == slots);
        CHECK(r.flow_state[i].size() == slots);
        REQUIRE(r.ofi[i].size() == slots);
        for (double x : r.ofi[i]) {
            CHECK(x >= -1.0);
            CHECK(x <= 1.0);
        }
    }
}

TEST_CASE("trade tape is sorted and stays inside session hours") {
    const SynthConfig cfg = small_config(17, 3, 10);
    const SynthResult r = generate(cfg);
    REQUIRE_FALSE(r.trades.empty());

    const std::set<std::string> symbols(r.symbols.begin(), r.symbols.end());
    const std::set<int64_t> days(r.grid.trading_days.begin(), r.grid.trading_days.end());
    constexpr int64_t kOpen = (9 * 3600 + 1800) * kNsPerSec;   // 09:30
    constexpr int64_t kClose = 16 * 3600 * kNsPerSec;          // 16:00

    for (size_t i = 0; i < r.trades.size(); ++i) {
        const bars::Trade& t = r.trades[i];
        CHECK(symbols.count(t.symbol) == 1);
        CHECK(t.price > 0.0);
        CHECK(t.volume >= 1.0);
        CHECK(t.volume == std::floor(t.volume));
        const int64_t day = t.timestamp / kNsPerDay;
        const int64_t tod = t.timestamp % kNsPerDay;
        CHECK(days.count(day) == 1);
        CHECK(tod >= kOpen);
        CHECK(tod < kClose);
        if (i > 0) {
            const bars::Trade& prev = r.trades[i - 1];
            const bool ordered = prev.timestamp < t.timestamp ||
                                 (prev.timestamp == t.timestamp && prev.symbol <= t.symbol);
            CHECK(ordered);
        }
    }
}

TEST_CASE("regime occupancy tracks the hazard ratio") {
    // stationary stressed fraction 0.01/(0.01+0.03), hot 0.006/(0.006+0.016)
    const SynthConfig cfg = small_config(29, 4, 260);
    const SynthResult r = generate(cfg);
    double stressed = 0.0, hot = 0.0;
    for (size_t i = 0; i < 4; ++i) {
        stressed += state_fraction(r.vol_state[i]);
        hot += state_fraction(r.flow_state[i]);
    }
    stressed /= 4.0;
    hot /= 4.0;
    CHECK(stressed == doctest::Approx(0.25).epsilon(0.35));
    CHECK(hot == doctest::Approx(0.273).epsilon(0.35));
}

TEST_CASE("truth json records the planted structure") {
    SynthConfig cfg = small_config(7, 3, 10);
    cfg.influences.push_back({0, 2, 4, 0.9});
    const SynthResult r = generate(cfg);

    const std::string path = "test_synth_truth.json";
    write_truth_json(path, cfg, r);
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    std::remove(path.c_str());

    const nlohmann::json j = nlohmann::json::parse(buf.str());
    CHECK(j["seed"] == 7);
    CHECK(j["n_firms"] == 3);
    CHECK(j["days"] == 10);
    CHECK(j["start_date"] == "2024-01-02");
    CHECK(j["symbols"] == nlohmann::json({"SYN00", "SYN01", "SYN02"}));
    CHECK(j["mcaps"].size() == 3);
    REQUIRE(j["influences"].size() == 1);
    CHECK(j["influences"][0]["source"] == "SYN00");
    CHECK(j["influences"][0]["target"] == "SYN02");
    CHECK(j["influences"][0]["lag"] == 4);
    CHECK(j["influences"][0]["strength"] == 0.9);
    CHECK(j["n_trades"] == r.trades.size());
    REQUIRE(j["stressed_fraction"].size() == 3);
    REQUIRE(j["hot_fraction"].size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(j["stressed_fraction"][i].get<double>() ==
              doctest::Approx(state_fraction(r.vol_state[i])).epsilon(1e-12));
        CHECK(j["hot_fraction"][i].get<double>() ==
              doctest::Approx(state_fraction(r.flow_state[i])).epsilon(1e-12));
    }
}
