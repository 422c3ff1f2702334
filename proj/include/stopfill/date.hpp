#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace stopfill {

// Calendar date (proleptic Gregorian). Weekdays use 0 = Sunday .. 6 = Saturday.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    bool valid() const;
    int weekday() const;
    std::int64_t days_since_epoch() const;
    Date plus_days(int n) const;

    std::string to_string() const;  // YYYY-MM-DD

    auto operator<=>(const Date&) const = default;
};

// Accepts YYYY-MM-DD and YYYYMMDD. Returns an invalid Date on failure.
Date parse_date(const std::string& text);

struct DateHash {
    std::size_t operator()(const Date& d) const {
        return std::hash<std::int64_t>{}((std::int64_t(d.year) << 16) | (d.month << 8) | d.day);
    }
};

// GTFS clock value "H:MM:SS"; hours past 24 are kept (overnight trips run past
// 86400 on the same service day). Returns -1 on malformed input.
int parse_clock_seconds(const std::string& text);

std::string clock_to_string(int seconds);

inline int hour_of_day(int seconds_from_midnight) {
    int h = (seconds_from_midnight / 3600) % 24;
    return h < 0 ? h + 24 : h;
}

}  // namespace stopfill
