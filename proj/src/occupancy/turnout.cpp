#include "microtwin/occupancy/turnout.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "microtwin/error.hpp"
#include "microtwin/sim/calendar.hpp"
#include "microtwin/sim/interpolation.hpp"

namespace microtwin::occupancy {

WeeklySchedule default_schedule(double weekday_peak, double weekend_fraction) {
    WeeklySchedule s;
    for (int d = 0; d < 7; ++d) {
        double peak = d < 5 ? weekday_peak : weekday_peak * weekend_fraction;
        s[static_cast<std::size_t>(d)] = {{0, 0}, {8, 0}, {12, peak}, {18, peak}, {20, 0}};
    }
    return s;
}

WeeklySchedule load_schedule_csv(std::istream& in) {
    WeeklySchedule s;
    std::string line;
    if (!std::getline(in, line) || line.rfind("day_of_week,hour,persons", 0) != 0) {
        throw Error(ErrorKind::Validation, "schedule CSV must start with header 'day_of_week,hour,persons'");
    }
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string d, h, p;
        if (!std::getline(fields, d, ',') || !std::getline(fields, h, ',') || !std::getline(fields, p)) {
            throw Error(ErrorKind::Validation, "schedule CSV row " + std::to_string(row) + ": expected 3 fields");
        }
        try {
            int day = std::stoi(d);
            if (day < 0 || day > 6) throw std::out_of_range("day");
            s[static_cast<std::size_t>(day)].push_back({std::stod(h), std::stod(p)});
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::Validation, "schedule CSV row " + std::to_string(row) + ": bad value in '" + line + "'");
        }
    }
    return s;
}

WeeklySchedule load_schedule_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open schedule " + path.string());
    return load_schedule_csv(in);
}

void TurnoutModel::validate() const {
    if (cluster_size < 1) throw Error(ErrorKind::Validation, "turnout cluster_size must be >= 1");
    if (base_load_kw < 0) throw Error(ErrorKind::Validation, "turnout base_load must be >= 0");
    if (sigma_w < 0) throw Error(ErrorKind::Validation, "turnout sigma must be >= 0");
    for (std::size_t d = 0; d < schedule.size(); ++d) {
        const auto& day = schedule[d];
        for (std::size_t i = 0; i < day.size(); ++i) {
            if (day[i].persons < 0) {
                throw Error(ErrorKind::Validation, "turnout schedule day " + std::to_string(d) + " has negative persons");
            }
            if (day[i].hour < 0 || day[i].hour > 24 || (i > 0 && day[i].hour <= day[i - 1].hour)) {
                throw Error(ErrorKind::Validation,
                            "turnout schedule day " + std::to_string(d) + " hours must increase within [0, 24]");
            }
        }
    }
}

double turnout_at(const TurnoutModel& model, double unix_time) {
    int dow = sim::day_of_week(static_cast<sim::UnixSeconds>(std::floor(unix_time)));
    const auto& anchors = model.schedule[static_cast<std::size_t>(dow)];
    if (anchors.empty()) return 0.0;
    std::vector<sim::TablePoint> pts;
    pts.reserve(anchors.size());
    for (const auto& a : anchors) pts.push_back({a.hour, a.persons});
    sim::InterpolationTable table(std::move(pts), sim::InterpolationMode::Linear);
    return table(sim::seconds_of_day(unix_time) / 3600.0);
}

std::size_t cluster_count(double persons, int cluster_size) {
    if (persons <= 0) return 0;
    return static_cast<std::size_t>(std::ceil(persons / cluster_size - 1e-9));
}

double draw_client_load_w(const TurnoutModel& model, std::mt19937_64& rng) {
    double p = model.mu_w;
    if (model.sigma_w > 0) {
        std::normal_distribution<double> dist(model.mu_w, model.sigma_w);
        p = dist(rng);
    }
    return model.cluster_size * std::max(0.0, p);
}

double building_load(const TurnoutModel& model, double persons, std::mt19937_64& rng) {
    double sum_w = 0.0;
    std::size_t n = cluster_count(persons, model.cluster_size);
    for (std::size_t i = 0; i < n; ++i) sum_w += draw_client_load_w(model, rng);
    return model.base_load_kw + sum_w / 1000.0;
}

}  // namespace microtwin::occupancy
