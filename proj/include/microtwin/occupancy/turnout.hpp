#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace microtwin::occupancy {

struct ScheduleAnchor {
    double hour;     // 0..24
    double persons;
};

// One anchor list per day of week, 0 = Monday. Between anchors the turnout
// is linear; before the first / after the last anchor it holds.
using WeeklySchedule = std::array<std::vector<ScheduleAnchor>, 7>;

// Weekday trapezoid 08:00 rise, 12:00 peak, 18:00 fall, 20:00 empty; the
// weekend runs the same shape at `weekend_fraction` of the weekday peak.
WeeklySchedule default_schedule(double weekday_peak = 1200.0, double weekend_fraction = 0.1);

// `day_of_week,hour,persons` rows.
WeeklySchedule load_schedule_csv(std::istream& in);
WeeklySchedule load_schedule_csv(const std::filesystem::path& path);

struct TurnoutModel {
    int cluster_size = 10;        // C, persons per client
    double base_load_kw = 1.5;    // B
    double mu_w = 25.0;           // per person
    double sigma_w = 5.0;
    WeeklySchedule schedule = default_schedule();
    std::uint64_t seed = 0;

    // Throws Error(Validation) on C < 1, B < 0, sigma < 0, negative
    // schedule values or unordered anchors.
    void validate() const;
};

// Persons on campus at `unix_time` (UTC, day-of-week from the calendar).
double turnout_at(const TurnoutModel& model, double unix_time);

// ceil(T / C), with T within 1e-9 of a multiple of C counted exactly.
std::size_t cluster_count(double persons, int cluster_size);

// One draw of C * max(0, N(mu, sigma)) watts.
double draw_client_load_w(const TurnoutModel& model, std::mt19937_64& rng);

// E = B + sum over cluster_count(T, C) clusters of C * P_i, in kW.
double building_load(const TurnoutModel& model, double persons, std::mt19937_64& rng);

}  // namespace microtwin::occupancy
