#include "stopfill/date.hpp"

#include <chrono>
#include <cstdio>

namespace stopfill {

namespace {
std::chrono::year_month_day to_ymd(const Date& d) {
    return {std::chrono::year{d.year}, std::chrono::month{unsigned(d.month)},
            std::chrono::day{unsigned(d.day)}};
}
}  // namespace

bool Date::valid() const {
    return year != 0 && to_ymd(*this).ok();
}

std::int64_t Date::days_since_epoch() const {
    return std::chrono::sys_days(to_ymd(*this)).time_since_epoch().count();
}

int Date::weekday() const {
    return int(std::chrono::weekday(std::chrono::sys_days(to_ymd(*this))).c_encoding());
}

Date Date::plus_days(int n) const {
    std::chrono::sys_days sd = std::chrono::sys_days(to_ymd(*this)) + std::chrono::days{n};
    std::chrono::year_month_day ymd{sd};
    return {int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date parse_date(const std::string& text) {
    int y = 0, m = 0, d = 0;
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        if (std::sscanf(text.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3) return {};
    } else if (text.size() == 8) {
        if (std::sscanf(text.c_str(), "%4d%2d%2d", &y, &m, &d) != 3) return {};
    } else {
        return {};
    }
    Date out{y, m, d};
    return out.valid() ? out : Date{};
}

int parse_clock_seconds(const std::string& text) {
    const char* p = text.c_str();
    while (*p == ' ') ++p;
    if (*p < '0' || *p > '9') return -1;
    int parts[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        if (*p < '0' || *p > '9') return -1;
        while (*p >= '0' && *p <= '9') parts[i] = parts[i] * 10 + (*p++ - '0');
        if (i < 2 && *p++ != ':') return -1;
    }
    if (*p != '\0' || parts[1] > 59 || parts[2] > 59) return -1;
    return parts[0] * 3600 + parts[1] * 60 + parts[2];
}

std::string clock_to_string(int seconds) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", seconds / 3600, (seconds / 60) % 60,
                  seconds % 60);
    return buf;
}

}  // namespace stopfill
