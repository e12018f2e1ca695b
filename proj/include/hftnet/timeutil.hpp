#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hftnet {

// Local-clock nanoseconds since the Unix epoch. Trades are stamped in the
// exchange's local time; bars are always local-clock, so all arithmetic here
// is on the local calendar and no UTC conversion is ever performed.
using TimestampNs = int64_t;

inline constexpr int64_t kNsPerSec = 1'000'000'000LL;
inline constexpr int64_t kNsPerMin = 60 * kNsPerSec;
inline constexpr int64_t kNsPerHour = 60 * kNsPerMin;
inline constexpr int64_t kNsPerDay = 24 * kNsPerHour;

struct CivilDate {
    int year;
    int month;  // 1..12
    int day;    // 1..31
};

// days since 1970-01-01 (proleptic Gregorian)
int64_t days_from_civil(int year, int month, int day);
CivilDate civil_from_days(int64_t days);

inline int64_t day_of(TimestampNs ts) {
    // floor division; timestamps before the epoch are not expected but handled
    return ts >= 0 ? ts / kNsPerDay : -((-ts + kNsPerDay - 1) / kNsPerDay);
}

inline int64_t time_of_day(TimestampNs ts) { return ts - day_of(ts) * kNsPerDay; }

// Accepts `YYYY-MM-DD HH:MM:SS[.f{1..9}]` and ISO-8601
// `YYYY-MM-DDTHH:MM:SS[.f{1..9}][Z|+HH:MM|-HH:MM]`. The wall-clock fields are
// taken as the local clock; a trailing offset is validated and recorded by the
// caller but does not shift the clock (it names the zone the clock is in).
// Throws DataError on malformed input.
TimestampNs parse_timestamp(std::string_view s);

// `YYYY-MM-DD` -> days since epoch
int64_t parse_date(std::string_view s);

std::string format_date(int64_t days);
std::string format_time_of_day(int64_t ns_of_day);        // HH:MM:SS
std::string format_timestamp(TimestampNs ts);             // YYYY-MM-DD HH:MM:SS[.ffffff]

}  // namespace hftnet
