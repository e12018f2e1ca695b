#include "hftnet/bars.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"

namespace hftnet::bars {

void SessionGrid::validate() const {
    if (bar_width_ns <= 0) throw ConfigError("bar width must be positive");
    if (session_close_ns <= session_open_ns)
        throw ConfigError("session close must be after session open");
    if ((session_close_ns - session_open_ns) % bar_width_ns != 0)
        throw ConfigError("session length is not a multiple of the bar width");
    if (trading_days.empty()) throw ConfigError("grid has no trading days");
    for (size_t i = 1; i < trading_days.size(); ++i)
        if (trading_days[i] <= trading_days[i - 1])
            throw ConfigError("trading days must be sorted and unique");
}

TimestampNs SessionGrid::bar_start(int64_t index) const {
    const int spd = slots_per_day();
    const int64_t day = trading_days[static_cast<size_t>(index / spd)];
    const int64_t slot = index % spd + (drop_first_bar ? 1 : 0);
    return day * kNsPerDay + session_open_ns + slot * bar_width_ns;
}

int64_t SessionGrid::find_day(int64_t day) const {
    auto it = std::lower_bound(trading_days.begin(), trading_days.end(), day);
    if (it == trading_days.end() || *it != day) return -1;
    return it - trading_days.begin();
}

double BarSeries::close_at(int64_t t) const {
    const TimeBar& b = bars[static_cast<size_t>(t)];
    return b.has_close() ? b.close : missing();
}

std::vector<double> BarSeries::closes() const {
    std::vector<double> out(bars.size());
    for (size_t i = 0; i < bars.size(); ++i) {
        const TimeBar& b = bars[i];
        out[i] = b.has_close() ? b.close : missing();
    }
    return out;
}

std::vector<double> BarSeries::volumes() const {
    std::vector<double> out(bars.size());
    for (size_t i = 0; i < bars.size(); ++i) out[i] = bars[i].volume;
    return out;
}

std::vector<double> BarSeries::dollar_volumes() const {
    std::vector<double> out(bars.size());
    for (size_t i = 0; i < bars.size(); ++i) out[i] = bars[i].dollar_volume;
    return out;
}

std::vector<Trade> filter_trades(const std::vector<Trade>& raw, const FilterRules& rules,
                                 FilterStats* stats) {
    FilterStats local;
    std::vector<Trade> kept;
    kept.reserve(raw.size());
    const int64_t open_ns = 9 * kNsPerHour + 30 * kNsPerMin;
    const int64_t close_ns = 16 * kNsPerHour;
    for (const Trade& t : raw) {
        if (rules.positive_price_volume && (t.price <= 0.0 || t.volume <= 0.0)) {
            ++local.dropped_price_volume;
            continue;
        }
        if (rules.market_hours) {
            const int64_t tod = time_of_day(t.timestamp);
            if (tod < open_ns || tod >= close_ns) {
                ++local.dropped_market_hours;
                continue;
            }
        }
        if (rules.blank_suffix && t.has_suffix && !t.symbol_suffix.empty()) {
            ++local.dropped_suffix;
            continue;
        }
        if (rules.correction_00 && t.has_correction && t.correction_flag != "00") {
            ++local.dropped_correction;
            continue;
        }
        kept.push_back(t);
        ++local.kept;
    }
    if (stats) *stats = local;
    return kept;
}

BarSeries aggregate(const std::vector<Trade>& trades, const SessionGrid& grid) {
    grid.validate();
    BarSeries series;
    series.grid = grid;
    series.bars.assign(static_cast<size_t>(grid.n_bars()), TimeBar{});
    if (!trades.empty()) series.symbol = trades.front().symbol;

    const int spd = grid.slots_per_day();
    const int first_slot = grid.drop_first_bar ? 1 : 0;
    for (const Trade& t : trades) {
        const int64_t day = day_of(t.timestamp);
        const int64_t day_idx = grid.find_day(day);
        if (day_idx < 0)
            throw DataError("trade on " + format_date(day) + " is outside the grid's trading days");
        const int64_t tod = time_of_day(t.timestamp);
        if (tod < grid.session_open_ns || tod >= grid.session_close_ns) continue;
        const int64_t raw_slot = (tod - grid.session_open_ns) / grid.bar_width_ns;
        if (raw_slot < first_slot) continue;  // excised first bar of the day
        const size_t idx = static_cast<size_t>(day_idx * spd + (raw_slot - first_slot));
        TimeBar& bar = series.bars[idx];
        if (bar.is_empty) {
            bar.open = t.price;
            bar.is_empty = false;
        }
        bar.close = t.price;
        bar.volume += t.volume;
        bar.dollar_volume += t.price * t.volume;
        bar.trade_count += 1;
    }
    return series;
}

BarSeries apply_fill_policy(const BarSeries& series, FillPolicy policy) {
    if (policy == FillPolicy::none) return series;
    BarSeries out = series;
    double last_close = missing();
    for (TimeBar& bar : out.bars) {
        if (bar.is_empty) {
            if (!is_missing(last_close)) {
                bar.close = last_close;
                bar.open = last_close;
                bar.filled = true;
            }
        } else {
            last_close = bar.close;
        }
    }
    return out;
}

double sparse_fraction(const BarSeries& series, int64_t min_trades) {
    if (series.bars.empty()) return 1.0;
    int64_t sparse = 0;
    for (const TimeBar& b : series.bars)
        if (b.trade_count < min_trades) ++sparse;
    return static_cast<double>(sparse) / static_cast<double>(series.bars.size());
}

SessionGrid grid_from_trades(const std::vector<Trade>& trades, bool drop_first_bar) {
    if (trades.empty()) throw DataError("cannot build a session grid from zero trades");
    std::set<int64_t> days;
    for (const Trade& t : trades) days.insert(day_of(t.timestamp));
    SessionGrid grid;
    grid.drop_first_bar = drop_first_bar;
    grid.trading_days.assign(days.begin(), days.end());
    return grid;
}

std::map<std::string, std::vector<Trade>> group_by_symbol(std::vector<Trade> trades) {
    std::map<std::string, std::vector<Trade>> out;
    for (Trade& t : trades) out[t.symbol].push_back(std::move(t));
    for (auto& [sym, vec] : out)
        std::stable_sort(vec.begin(), vec.end(),
                         [](const Trade& a, const Trade& b) { return a.timestamp < b.timestamp; });
    return out;
}

std::vector<Trade> read_trades_csv_stream(std::istream& in, const std::string& name) {
    CsvTable table = read_csv_stream(in, name);
    const int c_sym = table.column("symbol");
    const int c_ts = table.column("timestamp");
    const int c_price = table.column("price");
    const int c_vol = table.column("volume");
    if (c_sym < 0 || c_ts < 0 || c_price < 0 || c_vol < 0)
        throw DataError(name + ": header must contain symbol,timestamp,price,volume");
    const int c_corr = table.column("corr");
    const int c_suffix = table.column("suffix");

    std::vector<Trade> trades;
    trades.reserve(table.rows.size());
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        Trade t;
        t.symbol = row[static_cast<size_t>(c_sym)];
        try {
            t.timestamp = parse_timestamp(row[static_cast<size_t>(c_ts)]);
        } catch (const DataError& e) {
            throw DataError(name + ":" + std::to_string(table.line_numbers[i]) + ": " + e.what());
        }
        try {
            t.price = std::stod(row[static_cast<size_t>(c_price)]);
            t.volume = std::stod(row[static_cast<size_t>(c_vol)]);
        } catch (const std::exception&) {
            throw DataError(name + ":" + std::to_string(table.line_numbers[i]) +
                            ": bad price/volume field");
        }
        if (c_corr >= 0) {
            t.correction_flag = row[static_cast<size_t>(c_corr)];
            t.has_correction = !t.correction_flag.empty();
        }
        if (c_suffix >= 0) {
            t.symbol_suffix = row[static_cast<size_t>(c_suffix)];
            t.has_suffix = !t.symbol_suffix.empty();
        }
        trades.push_back(std::move(t));
    }
    return trades;
}

std::vector<Trade> read_trades_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_trades_csv_stream(in, path);
}

void write_trades_csv(const std::string& path, const std::vector<Trade>& trades,
                      const std::string& manifest_id) {
    bool flags = false;
    for (const Trade& t : trades)
        if (t.has_correction || t.has_suffix) {
            flags = true;
            break;
        }
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    if (flags)
        w.row({"symbol", "timestamp", "price", "volume", "corr", "suffix"});
    else
        w.row({"symbol", "timestamp", "price", "volume"});
    for (const Trade& t : trades) {
        std::vector<std::string> row = {t.symbol, format_timestamp(t.timestamp),
                                        format_double(t.price), format_double(t.volume)};
        if (flags) {
            row.push_back(t.correction_flag);
            row.push_back(t.symbol_suffix);
        }
        w.row(row);
    }
}

void write_bars_csv(const std::string& path, const std::vector<BarSeries>& series,
                    const std::string& manifest_id) {
    CsvWriter w(path);
    if (!manifest_id.empty()) w.comment("manifest=" + manifest_id);
    w.row({"symbol", "date", "slot_start", "open", "close", "volume", "dollar_volume",
           "trade_count", "is_empty"});
    for (const BarSeries& s : series) {
        for (int64_t t = 0; t < s.size(); ++t) {
            const TimeBar& b = s.bars[static_cast<size_t>(t)];
            const TimestampNs start = s.grid.bar_start(t);
            w.row({s.symbol, format_date(day_of(start)), format_time_of_day(time_of_day(start)),
                   b.has_close() ? format_double(b.open) : "",
                   b.has_close() ? format_double(b.close) : "", format_double(b.volume),
                   format_double(b.dollar_volume), std::to_string(b.trade_count),
                   b.is_empty ? "1" : "0"});
        }
    }
    w.close();
}

std::vector<BarSeries> read_bars_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const char* needed[] = {"symbol", "date",          "slot_start",  "open",    "close",
                            "volume", "dollar_volume", "trade_count", "is_empty"};
    for (const char* col : needed)
        if (table.column(col) < 0) throw DataError(path + ": missing column " + col);
    const int c_sym = table.column("symbol"), c_date = table.column("date"),
              c_slot = table.column("slot_start"), c_open = table.column("open"),
              c_close = table.column("close"), c_vol = table.column("volume"),
              c_dvol = table.column("dollar_volume"), c_cnt = table.column("trade_count"),
              c_empty = table.column("is_empty");

    // first pass: per-symbol slot metadata to rebuild the shared grid
    std::set<int64_t> days;
    std::set<int64_t> slot_starts;
    for (const auto& row : table.rows) {
        days.insert(parse_date(row[static_cast<size_t>(c_date)]));
        const std::string& slot = row[static_cast<size_t>(c_slot)];
        slot_starts.insert(parse_timestamp(row[static_cast<size_t>(c_date)] + " " + slot +
                                           (slot.size() == 5 ? ":00" : "")) %
                           kNsPerDay);
    }
    if (slot_starts.empty()) throw DataError(path + ": no bar rows");

    SessionGrid grid;
    grid.trading_days.assign(days.begin(), days.end());
    // infer width from consecutive slot starts; a single slot keeps the default
    std::vector<int64_t> slots(slot_starts.begin(), slot_starts.end());
    if (slots.size() >= 2) grid.bar_width_ns = slots[1] - slots[0];
    // if the 09:30 slot appears the grid was built without dropping the first bar
    grid.drop_first_bar = slots.front() != grid.session_open_ns;

    std::map<std::string, BarSeries> by_symbol;
    for (const auto& row : table.rows) {
        const std::string& sym = row[static_cast<size_t>(c_sym)];
        auto [it, inserted] = by_symbol.try_emplace(sym);
        BarSeries& s = it->second;
        if (inserted) {
            s.symbol = sym;
            s.grid = grid;
            s.bars.assign(static_cast<size_t>(grid.n_bars()), TimeBar{});
        }
        const int64_t day = parse_date(row[static_cast<size_t>(c_date)]);
        const int64_t day_idx = grid.find_day(day);
        const std::string& slot = row[static_cast<size_t>(c_slot)];
        const int64_t tod = parse_timestamp(row[static_cast<size_t>(c_date)] + " " + slot +
                                            (slot.size() == 5 ? ":00" : "")) %
                            kNsPerDay;
        const int64_t slot_idx = (tod - grid.session_open_ns) / grid.bar_width_ns -
                                 (grid.drop_first_bar ? 1 : 0);
        const size_t idx = static_cast<size_t>(day_idx * grid.slots_per_day() + slot_idx);
        TimeBar& b = s.bars[idx];
        b.is_empty = row[static_cast<size_t>(c_empty)] == "1";
        const std::string& open_s = row[static_cast<size_t>(c_open)];
        const std::string& close_s = row[static_cast<size_t>(c_close)];
        if (!close_s.empty()) {
            b.open = open_s.empty() ? std::stod(close_s) : std::stod(open_s);
            b.close = std::stod(close_s);
            b.filled = b.is_empty;
        }
        b.volume = std::stod(row[static_cast<size_t>(c_vol)]);
        b.dollar_volume = std::stod(row[static_cast<size_t>(c_dvol)]);
        b.trade_count = std::stoll(row[static_cast<size_t>(c_cnt)]);
    }

    std::vector<BarSeries> out;
    out.reserve(by_symbol.size());
    for (auto& [sym, s] : by_symbol) out.push_back(std::move(s));
    return out;
}

}  // namespace hftnet::bars
