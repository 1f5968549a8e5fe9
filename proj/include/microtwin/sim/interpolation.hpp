#pragma once

#include <string_view>
#include <vector>

namespace microtwin::sim {

enum class InterpolationMode {
    Linear,         // linear over the smallest bracketing interval
    NearestRecord,  // y of the point closest in x
};

InterpolationMode parse_interpolation_mode(std::string_view name);

struct TablePoint {
    double x;
    double y;
};

/// Finite x -> y mapping with strictly increasing x. Queries outside the
/// covered range clamp to the nearest endpoint.
class InterpolationTable {
public:
    InterpolationTable(std::vector<TablePoint> points, InterpolationMode mode);

    double operator()(double x) const;

    InterpolationMode mode() const noexcept { return mode_; }
    const std::vector<TablePoint>& points() const noexcept { return points_; }
    double front_x() const noexcept { return points_.front().x; }
    double back_x() const noexcept { return points_.back().x; }

private:
    std::vector<TablePoint> points_;
    InterpolationMode mode_;
};

double interpolate(const InterpolationTable& table, double x);

}  // namespace microtwin::sim
