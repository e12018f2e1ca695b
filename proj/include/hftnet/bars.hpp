#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hftnet/timeutil.hpp"

namespace hftnet::bars {

// One executed trade. `correction_flag` / `symbol_suffix` are pass-through
// TAQ-style fields consumed only by the filters.
struct Trade {
    std::string symbol;
    TimestampNs timestamp = 0;
    double price = 0.0;
    double volume = 0.0;
    std::string correction_flag;  // empty = field absent
    std::string symbol_suffix;    // empty = blank suffix
    bool has_correction = false;
    bool has_suffix = false;
};

struct FilterRules {
    bool positive_price_volume = true;
    bool market_hours = true;       // keep [09:30, 16:00) local, half-open
    bool blank_suffix = true;       // drop when a nonempty suffix is present
    bool correction_00 = true;      // drop when a flag other than "00" is present
};

struct FilterStats {
    int64_t dropped_price_volume = 0;
    int64_t dropped_market_hours = 0;
    int64_t dropped_suffix = 0;
    int64_t dropped_correction = 0;
    int64_t kept = 0;
    int64_t total() const {
        return dropped_price_volume + dropped_market_hours + dropped_suffix + dropped_correction;
    }
};

// Shared 30-minute slot grid over the trading session. Every BarSeries built
// from one grid maps bar_index k to the same wall-clock interval, which is
// what keeps firms synchronized.
struct SessionGrid {
    int64_t session_open_ns = 9 * kNsPerHour + 30 * kNsPerMin;  // 09:30
    int64_t session_close_ns = 16 * kNsPerHour;                 // 16:00
    int64_t bar_width_ns = 30 * kNsPerMin;
    bool drop_first_bar = true;
    std::vector<int64_t> trading_days;  // days since epoch, sorted, unique

    void validate() const;  // throws ConfigError on a malformed grid

    int raw_slots_per_day() const {
        return static_cast<int>((session_close_ns - session_open_ns) / bar_width_ns);
    }
    int slots_per_day() const { return raw_slots_per_day() - (drop_first_bar ? 1 : 0); }
    int64_t n_bars() const {
        return static_cast<int64_t>(trading_days.size()) * slots_per_day();
    }

    // wall-clock start of bar `index`; the bar covers [start, start + width)
    TimestampNs bar_start(int64_t index) const;
    int64_t day_index_of_bar(int64_t index) const { return index / slots_per_day(); }

    // grid-day lookup; -1 when the day is not a trading day
    int64_t find_day(int64_t day) const;

    bool operator==(const SessionGrid&) const = default;
};

struct TimeBar {
    double open = 0.0;
    double close = 0.0;
    double volume = 0.0;
    double dollar_volume = 0.0;
    int64_t trade_count = 0;
    bool is_empty = true;
    bool filled = false;  // close was forward-filled from a prior bar

    bool has_close() const { return !is_empty || filled; }
};

struct BarSeries {
    std::string symbol;
    SessionGrid grid;
    std::vector<TimeBar> bars;  // one entry per grid slot, indexed by bar_index

    int64_t size() const { return static_cast<int64_t>(bars.size()); }
    // close of bar t, missing() when the bar has none
    double close_at(int64_t t) const;
    std::vector<double> closes() const;
    std::vector<double> volumes() const;
    std::vector<double> dollar_volumes() const;
};

// Applies the four trade filters; returns survivors in input order and
// tallies per-rule drop counts.
std::vector<Trade> filter_trades(const std::vector<Trade>& raw, const FilterRules& rules,
                                 FilterStats* stats = nullptr);

// Builds the bar series for one symbol. `trades` must be sorted by timestamp
// (ties keep input order). Throws DataError for a trade on a non-grid day.
BarSeries aggregate(const std::vector<Trade>& trades, const SessionGrid& grid);

enum class FillPolicy { none, forward_fill_close };

// forward_fill_close: empty bars inherit the prior close (volume and dollar
// volume stay 0); leading empties with no prior close remain missing.
BarSeries apply_fill_policy(const BarSeries& series, FillPolicy policy);

// Fraction of bars with fewer than `min_trades` trades; the screening knob
// for dropping illiquid firms.
double sparse_fraction(const BarSeries& series, int64_t min_trades);

// grid whose trading days are the union of dates seen across all trades
SessionGrid grid_from_trades(const std::vector<Trade>& trades, bool drop_first_bar = true);

// stable sort by timestamp within each symbol; returns per-symbol sequences
std::map<std::string, std::vector<Trade>> group_by_symbol(std::vector<Trade> trades);

// CSV ingestion. Header `symbol,timestamp,price,volume[,corr,suffix]`.
// Unparseable records throw DataError naming the line.
std::vector<Trade> read_trades_csv(const std::string& path);
std::vector<Trade> read_trades_csv_stream(std::istream& in, const std::string& name);

// Writes the 6-column form when any trade carries a correction flag or a
// suffix, otherwise the 4-column form.
void write_trades_csv(const std::string& path, const std::vector<Trade>& trades,
                      const std::string& manifest_id = "");

// Output schema: symbol,date,slot_start,open,close,volume,dollar_volume,trade_count,is_empty
void write_bars_csv(const std::string& path, const std::vector<BarSeries>& series,
                    const std::string& manifest_id = "");
std::vector<BarSeries> read_bars_csv(const std::string& path);

}  // namespace hftnet::bars
