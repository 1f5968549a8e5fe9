#include "microtwin/sim/calendar.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "microtwin/error.hpp"

namespace microtwin::sim {

namespace {

using namespace std::chrono;

constexpr std::int64_t kDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace

UnixSeconds parse_iso8601(std::string_view text) {
    std::string s(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (n < 6 || (sep != 'T' && sep != ' ')) {
        throw Error(ErrorKind::Validation, "bad ISO-8601 timestamp '" + s + "'");
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) {
        throw Error(ErrorKind::Validation, "bad ISO-8601 timestamp '" + s + "'");
    }
    auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * kDay + h * 3600 + mi * 60 + sec;
}

std::string format_iso8601(UnixSeconds t) {
    std::int64_t days = floor_div(t, kDay);
    std::int64_t rem = t - days * kDay;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

int day_of_week(UnixSeconds t) {
    weekday wd{sys_days{std::chrono::days{floor_div(t, kDay)}}};
    // iso_encoding: Monday = 1 ... Sunday = 7
    return static_cast<int>(wd.iso_encoding()) - 1;
}

double seconds_of_day(double unix_time) {
    double r = std::fmod(unix_time, static_cast<double>(kDay));
    return r < 0 ? r + kDay : r;
}

double map_into_year(double unix_time, int target_year) {
    double whole = std::floor(unix_time);
    double frac = unix_time - whole;
    auto t = static_cast<std::int64_t>(whole);
    std::int64_t days = floor_div(t, kDay);
    std::int64_t rem = t - days * kDay;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    year_month_day moved{year{target_year}, ymd.month(), ymd.day()};
    if (!moved.ok()) {
        moved = year_month_day{year{target_year}, ymd.month(), day{28}};
    }
    auto moved_days = sys_days{moved}.time_since_epoch().count();
    return static_cast<double>(static_cast<std::int64_t>(moved_days) * kDay + rem) + frac;
}

}  // namespace microtwin::sim
