#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace microtwin::sim {

// UTC seconds since 1970-01-01.
using UnixSeconds = std::int64_t;

// Accepts "YYYY-MM-DDTHH:MM[:SS][Z]" and "YYYY-MM-DD HH:MM[:SS]".
UnixSeconds parse_iso8601(std::string_view text);
std::string format_iso8601(UnixSeconds t);

// 0 = Monday ... 6 = Sunday
int day_of_week(UnixSeconds t);
double seconds_of_day(double unix_time);

// Same month, day and time of day, moved into `year`. Feb 29 folds onto
// Feb 28 for non-leap years.
double map_into_year(double unix_time, int year);

}  // namespace microtwin::sim
