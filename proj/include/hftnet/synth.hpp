#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hftnet/bars.hpp"

namespace hftnet::synth {

// Directed planted link: the target's calm-to-stressed hazard rises with the
// source's lagged absolute order-flow imbalance.
struct InfluenceSpec {
    int source = 0;
    int target = 1;
    int lag = 1;  // in raw bar slots, must be >= 1
    double strength = 1.0;
};

struct SynthConfig {
    int n_firms = 2;
    int days = 260;                       // consecutive weekdays
    std::string start_date = "2024-01-02";
    double trades_per_bar = 40.0;         // Poisson mean per raw slot
    bool allow_empty_bars = false;        // when false a slot gets at least one trade

    double base_price_low = 40.0;         // firm base prices, log-spaced
    double base_price_high = 160.0;

    // two-state volatility regime, per-bar log-return sd
    double calm_vol = 0.0035;
    double stressed_vol = 0.016;
    double calm_spread = 0.0006;          // full relative bid-ask spread
    double stressed_spread = 0.0024;
    double vol_entry_hazard = 0.01;       // calm -> stressed, per raw slot
    double vol_exit_hazard = 0.03;

    // hot-flow episodes driving the order-flow imbalance
    double flow_entry_hazard = 0.006;
    double flow_exit_hazard = 0.016;
    double hot_flow_bias = 0.7;           // P(buy) = 0.5 + bias/2 while hot
    double flow_return_weight = 0.45;     // bar return loading on flow imbalance
    double hot_volume_boost = 1.6;

    double influence_gain = 0.12;         // hazard boost = gain * strength * |ofi|
    std::vector<InfluenceSpec> influences;
    uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

struct SynthResult {
    bars::SessionGrid grid;
    std::vector<std::string> symbols;
    std::vector<double> mcaps;
    std::vector<bars::Trade> trades;  // sorted by timestamp, then symbol

    // ground truth per [firm][raw slot] for tests and diagnostics
    std::vector<std::vector<uint8_t>> vol_state;   // 1 = stressed
    std::vector<std::vector<uint8_t>> flow_state;  // 1 = hot
    std::vector<std::vector<double>> ofi;          // signed, volume-weighted

    int64_t raw_slots() const {
        return static_cast<int64_t>(grid.trading_days.size()) * grid.raw_slots_per_day();
    }
};

// Deterministic in `cfg`: the same config always produces byte-identical
// trade tapes. Firms are generated on independent seed streams; the influence
// coupling only reads other firms' past imbalance.
SynthResult generate(const SynthConfig& cfg);

void write_truth_json(const std::string& path, const SynthConfig& cfg,
                      const SynthResult& result);

}  // namespace hftnet::synth
