#include "microtwin/sim/interpolation.hpp"

#include <algorithm>
#include <string>

#include "microtwin/error.hpp"

namespace microtwin::sim {

InterpolationMode parse_interpolation_mode(std::string_view name) {
    if (name == "linear" || name == "linear-bracketing") {
        return InterpolationMode::Linear;
    }
    if (name == "nearest" || name == "nearest-record") {
        return InterpolationMode::NearestRecord;
    }
    throw Error(ErrorKind::Config, "unknown interpolation mode '" + std::string(name) + "'");
}

InterpolationTable::InterpolationTable(std::vector<TablePoint> points, InterpolationMode mode)
    : points_(std::move(points)), mode_(mode) {
    if (points_.empty()) {
        throw Error(ErrorKind::Config, "interpolation table is empty");
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].x > points_[i - 1].x)) {
            throw Error(ErrorKind::Config,
                        "interpolation table x values must be strictly increasing (index " +
                            std::to_string(i) + ")");
        }
    }
}

double InterpolationTable::operator()(double x) const {
    if (x <= points_.front().x) {
        return points_.front().y;
    }
    if (x >= points_.back().x) {
        return points_.back().y;
    }
    // first point with x_i > x; the bracket is [hi-1, hi]
    auto hi = std::upper_bound(points_.begin(), points_.end(), x,
                               [](double v, const TablePoint& p) { return v < p.x; });
    auto lo = hi - 1;
    if (lo->x == x) {
        return lo->y;
    }
    if (mode_ == InterpolationMode::NearestRecord) {
        // ties go to the earlier record
        return (x - lo->x) <= (hi->x - x) ? lo->y : hi->y;
    }
    double t = (x - lo->x) / (hi->x - lo->x);
    return lo->y + t * (hi->y - lo->y);
}

double interpolate(const InterpolationTable& table, double x) { return table(x); }

}  // namespace microtwin::sim
