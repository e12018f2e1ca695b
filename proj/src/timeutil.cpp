#include "hftnet/timeutil.hpp"

#include <array>
#include <cctype>
#include <cstdio>

#include "hftnet/common.hpp"

namespace hftnet {

int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

CivilDate civil_from_days(int64_t z) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

namespace {

bool parse_fixed_int(std::string_view s, size_t pos, size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (size_t i = pos; i < pos + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

[[noreturn]] void bad_timestamp(std::string_view s) {
    throw DataError("unparseable timestamp: '" + std::string(s) + "'");
}

}  // namespace

int64_t parse_date(std::string_view s) {
    int y, m, d;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
        !parse_fixed_int(s, 0, 4, y) || !parse_fixed_int(s, 5, 2, m) ||
        !parse_fixed_int(s, 8, 2, d))
        throw DataError("unparseable date: '" + std::string(s) + "'");
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw DataError("date out of range: '" + std::string(s) + "'");
    return days_from_civil(y, m, d);
}

TimestampNs parse_timestamp(std::string_view s) {
    // date part
    if (s.size() < 19) bad_timestamp(s);
    int y, mo, d, h, mi, sec;
    if (s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') ||
        s[13] != ':' || s[16] != ':' ||
        !parse_fixed_int(s, 0, 4, y) || !parse_fixed_int(s, 5, 2, mo) ||
        !parse_fixed_int(s, 8, 2, d) || !parse_fixed_int(s, 11, 2, h) ||
        !parse_fixed_int(s, 14, 2, mi) || !parse_fixed_int(s, 17, 2, sec))
        bad_timestamp(s);
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
        bad_timestamp(s);

    size_t pos = 19;
    int64_t frac_ns = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        size_t ndig = 0;
        int64_t v = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])) && ndig < 9) {
            v = v * 10 + (s[pos] - '0');
            ++pos;
            ++ndig;
        }
        if (ndig == 0) bad_timestamp(s);
        for (size_t i = ndig; i < 9; ++i) v *= 10;
        frac_ns = v;
    }
    // optional zone designator: validated, clock not shifted
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            pos = s.size();
        } else if (s[pos] == '+' || s[pos] == '-') {
            int oh, om;
            if (pos + 6 != s.size() || s[pos + 3] != ':' ||
                !parse_fixed_int(s, pos + 1, 2, oh) || !parse_fixed_int(s, pos + 4, 2, om))
                bad_timestamp(s);
            pos = s.size();
        } else {
            bad_timestamp(s);
        }
    }

    const int64_t days = days_from_civil(y, mo, d);
    return days * kNsPerDay + h * kNsPerHour + mi * kNsPerMin + sec * kNsPerSec + frac_ns;
}

std::string format_date(int64_t days) {
    const CivilDate c = civil_from_days(days);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

std::string format_time_of_day(int64_t ns) {
    const int h = static_cast<int>(ns / kNsPerHour);
    const int m = static_cast<int>((ns % kNsPerHour) / kNsPerMin);
    const int s = static_cast<int>((ns % kNsPerMin) / kNsPerSec);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", h, m, s);
    return buf;
}

std::string format_timestamp(TimestampNs ts) {
    const int64_t days = day_of(ts);
    const int64_t ns = time_of_day(ts);
    std::string out = format_date(days) + " " + format_time_of_day(ns);
    const int64_t sub = ns % kNsPerSec;
    if (sub != 0) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ".%06d", static_cast<int>(sub / 1000));
        out += buf;
    }
    return out;
}

}  // namespace hftnet
