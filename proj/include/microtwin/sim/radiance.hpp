#pragma once

#include <filesystem>
#include <iosfwd>

#include "microtwin/sim/interpolation.hpp"

namespace microtwin::sim {

// Reads `timestamp,watt_per_msq` rows (ISO-8601 UTC) into a nearest-record
// table keyed by unix seconds.
InterpolationTable load_radiance_csv(std::istream& in);
InterpolationTable load_radiance_csv(const std::filesystem::path& path);

/// Sun position lookup over a one-year radiance table. Any calendar time is
/// folded into the table's reference year before the lookup.
class SunSimulator {
public:
    SunSimulator(InterpolationTable table, int reference_year);

    double irradiance_at(double unix_time) const;

private:
    InterpolationTable table_;
    int reference_year_;
};

}  // namespace microtwin::sim
