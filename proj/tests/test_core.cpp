#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hftnet/common.hpp"
#include "hftnet/csv.hpp"
#include "hftnet/rng.hpp"
#include "hftnet/stats.hpp"
#include "hftnet/timeutil.hpp"

using namespace hftnet;

TEST_CASE("civil date round trip") {
    CHECK(days_from_civil(1970, 1, 1) == 0);
    CHECK(days_from_civil(1970, 1, 2) == 1);
    CHECK(days_from_civil(1969, 12, 31) == -1);
    CHECK(days_from_civil(2000, 3, 1) == 11017);
    // every day over two leap cycles survives the round trip
    for (int64_t d = days_from_civil(1999, 1, 1); d <= days_from_civil(2009, 1, 1); ++d) {
        const CivilDate c = civil_from_days(d);
        CHECK(days_from_civil(c.year, c.month, c.day) == d);
    }
    const CivilDate leap = civil_from_days(days_from_civil(2024, 2, 29));
    CHECK(leap.year == 2024);
    CHECK(leap.month == 2);
    CHECK(leap.day == 29);
}

TEST_CASE("timestamp parsing") {
    const int64_t day = days_from_civil(2024, 1, 2);
    CHECK(parse_timestamp("2024-01-02 09:30:00") ==
          day * kNsPerDay + 9 * kNsPerHour + 30 * kNsPerMin);
    CHECK(parse_timestamp("2024-01-02T09:30:00") == parse_timestamp("2024-01-02 09:30:00"));
    CHECK(parse_timestamp("2024-01-02 09:30:00.5") ==
          parse_timestamp("2024-01-02 09:30:00") + 500'000'000LL);
    CHECK(parse_timestamp("2024-01-02 09:30:00.123456789") ==
          parse_timestamp("2024-01-02 09:30:00") + 123'456'789LL);
    // zone suffix is validated but the wall clock is kept as-is
    CHECK(parse_timestamp("2024-01-02T09:30:00Z") == parse_timestamp("2024-01-02 09:30:00"));
    CHECK(parse_timestamp("2024-01-02T09:30:00-05:00") ==
          parse_timestamp("2024-01-02 09:30:00"));

    CHECK_THROWS_AS(parse_timestamp("2024-01-02"), DataError);
    CHECK_THROWS_AS(parse_timestamp("2024-13-02 09:30:00"), DataError);
    CHECK_THROWS_AS(parse_timestamp("2024-01-02 24:00:00"), DataError);
    CHECK_THROWS_AS(parse_timestamp("2024-01-02 09:30:00."), DataError);
    CHECK_THROWS_AS(parse_timestamp("2024-01-02 09:30:00.0123456789"), DataError);
    CHECK_THROWS_AS(parse_timestamp("not a time"), DataError);
    CHECK_THROWS_AS(parse_date("2024-1-02"), DataError);
}

TEST_CASE("timestamp formatting") {
    const TimestampNs ts = parse_timestamp("2024-07-15 15:59:59");
    CHECK(format_timestamp(ts) == "2024-07-15 15:59:59");
    CHECK(format_timestamp(ts + 250'000'000LL) == "2024-07-15 15:59:59.250000");
    CHECK(format_date(days_from_civil(2024, 7, 15)) == "2024-07-15");
    CHECK(format_time_of_day(9 * kNsPerHour + 30 * kNsPerMin) == "09:30:00");
    CHECK(day_of(ts) == days_from_civil(2024, 7, 15));
    CHECK(time_of_day(ts) == 15 * kNsPerHour + 59 * kNsPerMin + 59 * kNsPerSec);
}

TEST_CASE("csv reading") {
    std::istringstream in(
        "# manifest=deadbeef\n"
        "a,b,c\n"
        "1,2,3\n"
        "\n"
        "4,,6\n");
    const CsvTable t = read_csv_stream(in, "mem");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"1", "2", "3"});
    CHECK(t.rows[1] == std::vector<std::string>{"4", "", "6"});
    CHECK(t.line_numbers[0] == 3);
    CHECK(t.line_numbers[1] == 5);
    CHECK(t.column("b") == 1);
    CHECK(t.column("missing") == -1);

    std::istringstream bad(
        "a,b\n"
        "1,2,3\n");
    CHECK_THROWS_AS(read_csv_stream(bad, "mem"), DataError);
    CHECK_THROWS_AS(read_csv("/nonexistent/path.csv"), DataError);
}

TEST_CASE("csv writer round trip") {
    const std::string path = "/tmp/hftnet_test_csv_writer.csv";
    {
        CsvWriter w(path);
        w.comment("manifest=cafe");
        w.row({"x", "y"});
        w.row({"1", "two"});
        w.close();
    }
    const CsvTable t = read_csv(path);
    CHECK(t.header == std::vector<std::string>{"x", "y"});
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][1] == "two");
    std::ifstream raw(path);
    std::string first;
    std::getline(raw, first);
    CHECK(first == "# manifest=cafe");
    std::remove(path.c_str());
}

TEST_CASE("rng determinism and stream independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    // distinct tags give distinct streams, same tag reproduces
    Rng s1 = Rng::stream(7, 1), s2 = Rng::stream(7, 2), s1b = Rng::stream(7, 1);
    CHECK(s1.next() != s2.next());
    Rng s1c = Rng::stream(7, 1);
    CHECK(s1c.next() == s1b.next());

    // two-level tags differ from one-level with the same values
    Rng t1 = Rng::stream(7, 1, 2), t2 = Rng::stream(7, 1, 3);
    CHECK(t1.next() != t2.next());
}

TEST_CASE("rng uniform and below stay in range") {
    Rng rng(123);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    std::set<uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const uint64_t v = rng.below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("rng moments are sane") {
    Rng rng(99);
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
        su += rng.uniform();
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sn / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rng shuffle is a permutation and seed-stable") {
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    Rng rng(5);
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});

    std::vector<int> w{1, 2, 3, 4, 5, 6, 7, 8};
    Rng rng2(5);
    rng2.shuffle(w);
    CHECK(v == w);
}

TEST_CASE("stats helpers") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(stats::mean(v) == doctest::Approx(2.5));
    CHECK(stats::sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(stats::population_variance(v) == doctest::Approx(1.25));
    CHECK(stats::central_moment(v, 2) == doctest::Approx(1.25));

    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(stats::normal_cdf(-8.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("format_double round trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -0.0035}) {
        const std::string s = format_double(x);
        CHECK(std::stod(s) == x);
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
}
