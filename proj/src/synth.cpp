#include "hftnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hftnet/common.hpp"
#include "hftnet/rng.hpp"

#include <json.hpp>

namespace hftnet::synth {

namespace {

constexpr uint64_t kTagFlow = 0xA1;
constexpr uint64_t kTagRegime = 0xB2;
constexpr uint64_t kTagTrades = 0xC3;

int poisson(Rng& rng, double lambda) {
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > limit);
    return k - 1;
}

bool is_weekday(int64_t day) {
    const int64_t wd = ((day + 4) % 7 + 7) % 7;  // 0 = Sunday
    return wd >= 1 && wd <= 5;
}

double round4(double x) { return std::round(x * 10000.0) / 10000.0; }

struct SlotFlow {
    std::vector<int8_t> sides;
    std::vector<int32_t> volumes;
};

}  // namespace

void SynthConfig::validate() const {
    if (n_firms < 1) throw ConfigError("synth: n_firms must be positive");
    if (days < 1) throw ConfigError("synth: days must be positive");
    if (!(trades_per_bar > 0.0)) throw ConfigError("synth: trades_per_bar must be positive");
    if (!(base_price_low > 0.0) || base_price_high < base_price_low)
        throw ConfigError("synth: base price range is invalid");
    if (!(calm_vol > 0.0) || !(stressed_vol > 0.0))
        throw ConfigError("synth: volatilities must be positive");
    if (calm_spread < 0.0 || stressed_spread < 0.0)
        throw ConfigError("synth: spreads must be nonnegative");
    for (double h : {vol_entry_hazard, vol_exit_hazard, flow_entry_hazard, flow_exit_hazard})
        if (!(h >= 0.0 && h < 1.0)) throw ConfigError("synth: hazards must lie in [0,1)");
    if (!(hot_flow_bias >= 0.0 && hot_flow_bias < 1.0))
        throw ConfigError("synth: hot_flow_bias must lie in [0,1)");
    if (!(flow_return_weight >= 0.0 && flow_return_weight <= 1.0))
        throw ConfigError("synth: flow_return_weight must lie in [0,1]");
    if (hot_volume_boost < 1.0) throw ConfigError("synth: hot_volume_boost must be >= 1");
    if (influence_gain < 0.0) throw ConfigError("synth: influence_gain must be nonnegative");
    for (const InfluenceSpec& link : influences) {
        if (link.source < 0 || link.source >= n_firms || link.target < 0 ||
            link.target >= n_firms)
            throw ConfigError("synth: influence firm index out of range");
        if (link.source == link.target) throw ConfigError("synth: influence must cross firms");
        if (link.lag < 1) throw ConfigError("synth: influence lag must be >= 1");
        if (link.strength < 0.0) throw ConfigError("synth: influence strength must be >= 0");
    }
    try {
        parse_date(start_date);
    } catch (const DataError&) {
        throw ConfigError("synth: start_date must be YYYY-MM-DD");
    }
}

SynthResult generate(const SynthConfig& cfg) {
    cfg.validate();

    SynthResult res;
    res.grid.trading_days.reserve(static_cast<size_t>(cfg.days));
    int64_t day = parse_date(cfg.start_date);
    while (res.grid.trading_days.size() < static_cast<size_t>(cfg.days)) {
        if (is_weekday(day)) res.grid.trading_days.push_back(day);
        ++day;
    }
    res.grid.validate();

    const int slots_day = res.grid.raw_slots_per_day();
    const int64_t n_slots = static_cast<int64_t>(cfg.days) * slots_day;
    const size_t n_firms = static_cast<size_t>(cfg.n_firms);

    res.symbols.resize(n_firms);
    res.mcaps.resize(n_firms);
    std::vector<double> base_price(n_firms);
    for (size_t i = 0; i < n_firms; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "SYN%02d", static_cast<int>(i % 100));
        res.symbols[i] = buf;
        const double frac =
            n_firms > 1 ? static_cast<double>(i) / static_cast<double>(n_firms - 1) : 0.5;
        base_price[i] = cfg.base_price_low *
                        std::pow(cfg.base_price_high / cfg.base_price_low, frac);
        res.mcaps[i] = 5e8 * std::pow(1.9, static_cast<double>(i));
    }

    res.flow_state.assign(n_firms, std::vector<uint8_t>(static_cast<size_t>(n_slots), 0));
    res.vol_state.assign(n_firms, std::vector<uint8_t>(static_cast<size_t>(n_slots), 0));
    res.ofi.assign(n_firms, std::vector<double>(static_cast<size_t>(n_slots), 0.0));
    std::vector<std::vector<SlotFlow>> flows(
        n_firms, std::vector<SlotFlow>(static_cast<size_t>(n_slots)));

    // Flow pass: hot/quiet episodes, per-trade sides and volumes, imbalance.
    for (size_t i = 0; i < n_firms; ++i) {
        Rng rng = Rng::stream(cfg.seed, kTagFlow, static_cast<uint64_t>(i));
        uint8_t hot = 0;
        double episode_sign = 1.0;
        for (int64_t s = 0; s < n_slots; ++s) {
            const double u = rng.uniform();
            if (!hot && u < cfg.flow_entry_hazard) {
                hot = 1;
                episode_sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
            } else if (hot && u < cfg.flow_exit_hazard) {
                hot = 0;
            }
            res.flow_state[i][static_cast<size_t>(s)] = hot;

            int n = poisson(rng, cfg.trades_per_bar);
            if (!cfg.allow_empty_bars && n < 1) n = 1;
            SlotFlow& slot = flows[i][static_cast<size_t>(s)];
            slot.sides.resize(static_cast<size_t>(n));
            slot.volumes.resize(static_cast<size_t>(n));
            const double p_buy = 0.5 + (hot ? episode_sign * cfg.hot_flow_bias / 2.0 : 0.0);
            double signed_vol = 0.0, total_vol = 0.0;
            for (int k = 0; k < n; ++k) {
                const int8_t q = rng.uniform() < p_buy ? int8_t{1} : int8_t{-1};
                double v = std::exp(4.0 + 0.8 * rng.normal());
                if (hot) v *= cfg.hot_volume_boost;
                const int32_t vol = std::max<int32_t>(1, static_cast<int32_t>(std::llround(v)));
                slot.sides[static_cast<size_t>(k)] = q;
                slot.volumes[static_cast<size_t>(k)] = vol;
                signed_vol += q * static_cast<double>(vol);
                total_vol += static_cast<double>(vol);
            }
            res.ofi[i][static_cast<size_t>(s)] = n > 0 ? signed_vol / total_vol : 0.0;
        }
    }

    // Regime pass: the entry hazard reads other firms' lagged imbalance.
    for (size_t i = 0; i < n_firms; ++i) {
        Rng rng = Rng::stream(cfg.seed, kTagRegime, static_cast<uint64_t>(i));
        uint8_t stressed = 0;
        for (int64_t s = 0; s < n_slots; ++s) {
            const double u = rng.uniform();
            if (!stressed) {
                double hazard = cfg.vol_entry_hazard;
                for (const InfluenceSpec& link : cfg.influences) {
                    if (link.target != static_cast<int>(i)) continue;
                    const int64_t from = s - link.lag;
                    if (from < 0) continue;
                    hazard += cfg.influence_gain * link.strength *
                              std::fabs(res.ofi[static_cast<size_t>(link.source)]
                                               [static_cast<size_t>(from)]);
                }
                if (u < std::min(hazard, 0.5)) stressed = 1;
            } else if (u < cfg.vol_exit_hazard) {
                stressed = 0;
            }
            res.vol_state[i][static_cast<size_t>(s)] = stressed;
        }
    }

    // Price pass: lognormal walk per slot, trade prices bounce around the mid.
    const int64_t width = res.grid.bar_width_ns;
    const int64_t width_us = width / 1000;
    std::vector<std::vector<bars::Trade>> firm_trades(n_firms);
    for (size_t i = 0; i < n_firms; ++i) {
        Rng rng = Rng::stream(cfg.seed, kTagTrades, static_cast<uint64_t>(i));
        double mid = base_price[i];
        std::vector<int64_t> offsets;
        for (int64_t s = 0; s < n_slots; ++s) {
            const size_t day_idx = static_cast<size_t>(s / slots_day);
            const int slot_in_day = static_cast<int>(s % slots_day);
            const TimestampNs slot_start = res.grid.trading_days[day_idx] * kNsPerDay +
                                           res.grid.session_open_ns + slot_in_day * width;

            const SlotFlow& slot = flows[i][static_cast<size_t>(s)];
            const int n = static_cast<int>(slot.sides.size());
            const bool stressed = res.vol_state[i][static_cast<size_t>(s)] != 0;
            const double sigma = stressed ? cfg.stressed_vol : cfg.calm_vol;
            const double spread = stressed ? cfg.stressed_spread : cfg.calm_spread;

            double flow_z = 0.0;
            if (n > 0) {
                double sum = 0.0;
                for (int8_t q : slot.sides) sum += q;
                flow_z = sum / std::sqrt(static_cast<double>(n));
            }
            // The grid drops the first slot of each day; giving it a flat mid
            // keeps every close-to-close step on the kept bars a single
            // 30-minute return, so no time-of-day pattern is shared across
            // firms. Trades are still emitted so ingestion sees the slot.
            const bool warmup_slot = res.grid.drop_first_bar && slot_in_day == 0;
            const double w = cfg.flow_return_weight;
            const double bar_ret =
                warmup_slot ? 0.0
                            : sigma * (w * flow_z + std::sqrt(1.0 - w * w) * rng.normal());

            offsets.resize(static_cast<size_t>(n));
            for (int k = 0; k < n; ++k)
                offsets[static_cast<size_t>(k)] =
                    static_cast<int64_t>(rng.below(static_cast<uint64_t>(width_us))) * 1000;
            std::sort(offsets.begin(), offsets.end());

            for (int k = 0; k < n; ++k) {
                const double step_mid =
                    mid * std::exp(bar_ret * static_cast<double>(k + 1) /
                                   static_cast<double>(std::max(n, 1)));
                bars::Trade t;
                t.symbol = res.symbols[i];
                t.timestamp = slot_start + offsets[static_cast<size_t>(k)];
                t.price = round4(step_mid *
                                 (1.0 + 0.5 * spread * slot.sides[static_cast<size_t>(k)]));
                t.volume = static_cast<double>(slot.volumes[static_cast<size_t>(k)]);
                firm_trades[i].push_back(std::move(t));
            }
            mid *= std::exp(bar_ret);
        }
    }

    size_t total = 0;
    for (const auto& v : firm_trades) total += v.size();
    res.trades.reserve(total);
    for (auto& v : firm_trades)
        for (bars::Trade& t : v) res.trades.push_back(std::move(t));
    std::stable_sort(res.trades.begin(), res.trades.end(),
                     [](const bars::Trade& a, const bars::Trade& b) {
                         return a.timestamp < b.timestamp;
                     });
    return res;
}

void write_truth_json(const std::string& path, const SynthConfig& cfg,
                      const SynthResult& result) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["n_firms"] = cfg.n_firms;
    j["days"] = cfg.days;
    j["start_date"] = cfg.start_date;
    j["symbols"] = result.symbols;
    j["mcaps"] = result.mcaps;
    j["influences"] = nlohmann::ordered_json::array();
    for (const InfluenceSpec& link : cfg.influences) {
        nlohmann::ordered_json lj;
        lj["source"] = result.symbols[static_cast<size_t>(link.source)];
        lj["target"] = result.symbols[static_cast<size_t>(link.target)];
        lj["lag"] = link.lag;
        lj["strength"] = link.strength;
        j["influences"].push_back(std::move(lj));
    }
    j["n_trades"] = result.trades.size();
    nlohmann::ordered_json stressed = nlohmann::ordered_json::array();
    nlohmann::ordered_json hot = nlohmann::ordered_json::array();
    const double slots = static_cast<double>(result.raw_slots());
    for (size_t i = 0; i < result.symbols.size(); ++i) {
        int64_t sv = 0, sf = 0;
        for (uint8_t v : result.vol_state[i]) sv += v;
        for (uint8_t v : result.flow_state[i]) sf += v;
        stressed.push_back(static_cast<double>(sv) / slots);
        hot.push_back(static_cast<double>(sf) / slots);
    }
    j["stressed_fraction"] = std::move(stressed);
    j["hot_fraction"] = std::move(hot);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace hftnet::synth
