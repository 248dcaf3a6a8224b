// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "cdrflow/common.hpp"

namespace cdrflow {

// Seconds since the Unix epoch, UTC. All record timestamps live in this type;
// local wall-clock only appears when binning or labeling days.
using utc_seconds = std::int64_t;

// Days since the Unix epoch (can be negative).
using day_number = std::int32_t;

constexpr std::int64_t seconds_per_day = 86400;

// Howard Hinnant's civil-date algorithms; branch-free and locale-independent.
constexpr day_number days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<day_number>(era * 146097 + static_cast<int>(doe) - 719468);
}

struct civil_date {
    int year;
    unsigned month;
    unsigned day;
};

constexpr civil_date civil_from_days(day_number z0) {
    std::int64_t z = z0;
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), m, d};
}

// 0 = Monday ... 6 = Sunday.
constexpr int weekday_of(day_number d) {
    return static_cast<int>((static_cast<std::int64_t>(d) % 7 + 10) % 7);
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

inline std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

// Accepts "YYYY-MM-DDTHH:MM:SS" with optional trailing 'Z' (space also ok
// in place of 'T'). Anything else is a parse failure, not an exception.
inline std::optional<utc_seconds> parse_iso8601(std::string_view s) {
    if (s.size() == 20 && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
    if (s.size() != 19) return std::nullopt;
    if ((s[10] != 'T' && s[10] != ' ') || s[4] != '-' || s[7] != '-' || s[13] != ':' ||
        s[16] != ':')
        return std::nullopt;
    int y;
    unsigned mo, d, h, mi, se;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) ||
        !parse_int(s.substr(8, 2), d) || !parse_int(s.substr(11, 2), h) ||
        !parse_int(s.substr(14, 2), mi) || !parse_int(s.substr(17, 2), se))
        return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60) return std::nullopt;
    // reject nonexistent dates (e.g. Feb 30) by round-tripping
    const day_number dn = days_from_civil(y, mo, d);
    const civil_date back = civil_from_days(dn);
    if (back.year != y || back.month != mo || back.day != d) return std::nullopt;
    return static_cast<utc_seconds>(dn) * seconds_per_day + h * 3600 + mi * 60 + se;
}

inline std::optional<utc_seconds> parse_iso8601_or_date(std::string_view s) {
    if (s.size() == 10) return parse_iso8601(std::string(s) + "T00:00:00");
    return parse_iso8601(s);
}

inline void append_2(std::string& out, unsigned v) {
    out.push_back(static_cast<char>('0' + v / 10));
    out.push_back(static_cast<char>('0' + v % 10));
}

inline void append_iso8601(std::string& out, utc_seconds t) {
    const day_number dn = static_cast<day_number>(floor_div(t, seconds_per_day));
    const auto sod = static_cast<unsigned>(floor_mod(t, seconds_per_day));
    const civil_date cd = civil_from_days(dn);
    char ybuf[8];
    auto [p, ec] = std::to_chars(ybuf, ybuf + sizeof ybuf, cd.year);
    (void)ec;
    for (int pad = 4 - static_cast<int>(p - ybuf); pad > 0; --pad) out.push_back('0');
    out.append(ybuf, p);
    out.push_back('-');
    append_2(out, cd.month);
    out.push_back('-');
    append_2(out, cd.day);
    out.push_back('T');
    append_2(out, sod / 3600);
    out.push_back(':');
    append_2(out, sod / 60 % 60);
    out.push_back(':');
    append_2(out, sod % 60);
    out.push_back('Z');
}

inline std::string format_iso8601(utc_seconds t) {
    std::string s;
    s.reserve(20);
    append_iso8601(s, t);
    return s;
}

inline std::string format_date(day_number dn) {
    const civil_date cd = civil_from_days(dn);
    std::string s;
    char ybuf[8];
    auto [p, ec] = std::to_chars(ybuf, ybuf + sizeof ybuf, cd.year);
    (void)ec;
    for (int pad = 4 - static_cast<int>(p - ybuf); pad > 0; --pad) s.push_back('0');
    s.append(ybuf, p);
    s.push_back('-');
    append_2(s, cd.month);
    s.push_back('-');
    append_2(s, cd.day);
    return s;
}

inline std::optional<day_number> parse_date(std::string_view s) {
    auto t = parse_iso8601_or_date(s);
    if (!t) return std::nullopt;
    return static_cast<day_number>(floor_div(*t, seconds_per_day));
}

enum class day_type : std::uint8_t { workday = 0, weekend = 1 };

inline const char* day_type_name(day_type t) {
    return t == day_type::workday ? "workday" : "weekend";
}

// Local wall clock as a fixed UTC offset. Month-scale studies sit inside one
// DST regime, so a per-run offset is exact for the default June 2016 window.
struct local_clock {
    int offset_minutes = 120; // Europe/Budapest, summer

    std::int64_t to_local(utc_seconds t) const { return t + std::int64_t{60} * offset_minutes; }
    day_number local_day(utc_seconds t) const {
        return static_cast<day_number>(floor_div(to_local(t), seconds_per_day));
    }
    unsigned local_second_of_day(utc_seconds t) const {
        return static_cast<unsigned>(floor_mod(to_local(t), seconds_per_day));
    }
    // UTC instant of local midnight opening the given local day.
    utc_seconds day_start_utc(day_number local) const {
        return static_cast<utc_seconds>(local) * seconds_per_day -
               std::int64_t{60} * offset_minutes;
    }
};

// Labels each date workday or weekend/holiday. Saturday/Sunday by default,
// plus an explicit holiday list.
struct calendar {
    bool saturday_sunday_weekend = true;
    std::set<day_number> holidays;
    std::set<day_number> extra_workdays; // e.g. Hungarian swapped working Saturdays

    day_type type_of(day_number d) const {
        if (extra_workdays.count(d)) return day_type::workday;
        if (holidays.count(d)) return day_type::weekend;
        if (saturday_sunday_weekend && weekday_of(d) >= 5) return day_type::weekend;
        return day_type::workday;
    }
};

struct observation_period {
    utc_seconds begin = 0; // inclusive
    utc_seconds end = 0;   // exclusive

    bool contains(utc_seconds t) const { return t >= begin && t < end; }
    std::int64_t days(const local_clock& clock) const {
        return floor_div(clock.to_local(end) - clock.to_local(begin) + seconds_per_day - 1,
                         seconds_per_day);
    }
};

} // namespace cdrflow
