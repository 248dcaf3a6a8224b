// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "cdrflow/common.hpp"
#include "cdrflow/csv.hpp"
#include "cdrflow/rng.hpp"
#include "cdrflow/time.hpp"

using namespace cdrflow;

TEST_CASE("iso8601 parse and format round trip") {
    const auto t = parse_iso8601("2016-06-22T18:18:04Z");
    REQUIRE(t.has_value());
    CHECK(format_iso8601(*t) == "2016-06-22T18:18:04Z");
    CHECK(parse_iso8601("2016-06-22 18:18:04").has_value());
    CHECK(*parse_iso8601("1970-01-01T00:00:00Z") == 0);

    CHECK_FALSE(parse_iso8601("2016-02-30T00:00:00Z").has_value());
    CHECK_FALSE(parse_iso8601("2016-13-01T00:00:00Z").has_value());
    CHECK_FALSE(parse_iso8601("not-a-time").has_value());
    CHECK_FALSE(parse_iso8601("2016-06-22T25:00:00Z").has_value());
    CHECK(parse_iso8601("2016-02-29T12:00:00Z").has_value()); // leap year
    CHECK_FALSE(parse_iso8601("2015-02-29T12:00:00Z").has_value());
}

TEST_CASE("civil date math") {
    const day_number d = days_from_civil(2016, 6, 22);
    const civil_date back = civil_from_days(d);
    CHECK(back.year == 2016);
    CHECK(back.month == 6);
    CHECK(back.day == 22);
    CHECK(weekday_of(d) == 2); // Wednesday
    CHECK(weekday_of(days_from_civil(2016, 6, 18)) == 5); // Saturday
    CHECK(format_date(d) == "2016-06-22");
}

TEST_CASE("calendar day types for June 2016") {
    calendar cal;
    CHECK(cal.type_of(days_from_civil(2016, 6, 4)) == day_type::weekend);
    CHECK(cal.type_of(days_from_civil(2016, 6, 5)) == day_type::weekend);
    CHECK(cal.type_of(days_from_civil(2016, 6, 6)) == day_type::workday);
    CHECK(cal.type_of(days_from_civil(2016, 6, 22)) == day_type::workday);

    cal.holidays.insert(days_from_civil(2016, 6, 6));
    CHECK(cal.type_of(days_from_civil(2016, 6, 6)) == day_type::weekend);
}

TEST_CASE("local clock with fixed offset") {
    const local_clock clock{120};
    const auto t = *parse_iso8601("2016-06-22T18:18:04Z");
    CHECK(clock.local_day(t) == days_from_civil(2016, 6, 22));
    CHECK(clock.local_second_of_day(t) == 20u * 3600 + 18 * 60 + 4);
    // local midnight wraps to the previous UTC day
    const auto pre = *parse_iso8601("2016-06-21T23:30:00Z");
    CHECK(clock.local_day(pre) == days_from_civil(2016, 6, 22));
    CHECK(clock.day_start_utc(days_from_civil(2016, 6, 22)) ==
          *parse_iso8601("2016-06-21T22:00:00Z"));
}

TEST_CASE("csv splitter handles quoting") {
    csv_splitter s;
    auto f = s.split("a,b,c");
    REQUIRE(f.size() == 3);
    CHECK(f[1] == "b");
    f = s.split(R"("x,y",plain,"he said ""hi""")");
    REQUIRE(f.size() == 3);
    CHECK(f[0] == "x,y");
    CHECK(f[2] == "he said \"hi\"");
    f = s.split("one,,three\r");
    REQUIRE(f.size() == 3);
    CHECK(f[1].empty());
    CHECK(f[2] == "three");
}

TEST_CASE("csv writer is atomic") {
    const auto dir = std::filesystem::temp_directory_path() / "cdrflow_csv_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.csv";
    std::filesystem::remove(path);
    {
        csv_writer w(path);
        w.field("a,b");
        w.field_int(42);
        w.end_row();
        CHECK_FALSE(std::filesystem::exists(path)); // nothing visible before commit
        w.commit();
    }
    CHECK(std::filesystem::exists(path));
    CHECK(read_file(path) == "\"a,b\",42\n");
    {
        csv_writer w(path); // abandoned writer must not clobber or leak
        w.field("junk");
        w.end_row();
    }
    CHECK(read_file(path) == "\"a,b\",42\n");
    CHECK_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("double formatting round trips") {
    for (double v : {0.0, 1.5, -2.25, 0.1, 1e-9, 123456.789, 47.4979}) {
        double back;
        REQUIRE(parse_double(format_double(v), back));
        CHECK(back == v);
    }
}

TEST_CASE("rng determinism and fork independence") {
    rng a(1234), b(1234);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    rng c(1234);
    auto f1 = c.fork(7);
    auto f2 = c.fork(7);
    CHECK(f1.next_u64() == f2.next_u64());
    auto g = c.fork(8);
    CHECK(f1.next_u64() != g.next_u64());

    rng d(99);
    double mean = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) mean += d.uniform();
    mean /= n;
    CHECK(std::abs(mean - 0.5) < 0.02);
    std::uint64_t total = 0;
    for (int i = 0; i < 2000; ++i) total += d.poisson(40.0);
    CHECK(std::abs(static_cast<double>(total) / 2000.0 - 40.0) < 1.0);
}

TEST_CASE("fold_name collapses case and whitespace") {
    CHECK(fold_name("  Apple ") == "apple");
    CHECK(fold_name("Galaxy\t S7") == "galaxy s7");
    CHECK(fold_name("") == "");
}
