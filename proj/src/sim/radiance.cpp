#include "microtwin/sim/radiance.hpp"

#include <fstream>
#include <istream>
#include <string>

#include "microtwin/error.hpp"
#include "microtwin/sim/calendar.hpp"

namespace microtwin::sim {

InterpolationTable load_radiance_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::Config, "radiance CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "timestamp,watt_per_msq") {
        throw Error(ErrorKind::Config, "radiance CSV header must be 'timestamp,watt_per_msq', got '" + line + "'");
    }
    std::vector<TablePoint> points;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw Error(ErrorKind::Config, "radiance CSV row " + std::to_string(row) + ": missing value");
        }
        try {
            auto t = parse_iso8601(line.substr(0, comma));
            double w = std::stod(line.substr(comma + 1));
            points.push_back({static_cast<double>(t), w});
        } catch (const std::exception& e) {
            throw Error(ErrorKind::Config, "radiance CSV row " + std::to_string(row) + ": " + e.what());
        }
    }
    return InterpolationTable(std::move(points), InterpolationMode::NearestRecord);
}

InterpolationTable load_radiance_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot open radiance CSV " + path.string());
    }
    return load_radiance_csv(in);
}

SunSimulator::SunSimulator(InterpolationTable table, int reference_year)
    : table_(std::move(table)), reference_year_(reference_year) {}

double SunSimulator::irradiance_at(double unix_time) const {
    return table_(map_into_year(unix_time, reference_year_));
}

}  // namespace microtwin::sim
