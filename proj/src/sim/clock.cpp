#include "microtwin/sim/clock.hpp"

#include <cmath>
#include <string>

#include "microtwin/error.hpp"

namespace microtwin::sim {

SimClock::SimClock(double scale, double tick) : scale_(scale), tick_(tick) {
    if (!(scale >= 1.0)) {
        throw Error(ErrorKind::Config, "clock scale must be >= 1, got " + std::to_string(scale));
    }
    if (!(tick > 0.0)) {
        throw Error(ErrorKind::Config, "clock tick must be positive");
    }
}

double SimClock::advance(double real_elapsed) {
    if (real_elapsed < 0.0) {
        throw Error(ErrorKind::Config, "real elapsed time must be non-negative");
    }
    // The small epsilon keeps exact multiples (0.3 / 0.1) from flooring down.
    double ticks = std::floor(real_elapsed * scale_ / tick_ + 1e-9);
    double next = now() + ticks * tick_;
    epoch_.store(next, std::memory_order_release);
    return next;
}

void SimClock::set(double sim_time) {
    if (sim_time < now()) {
        throw Error(ErrorKind::Config, "simulated time cannot move backwards");
    }
    epoch_.store(sim_time, std::memory_order_release);
}

}  // namespace microtwin::sim
