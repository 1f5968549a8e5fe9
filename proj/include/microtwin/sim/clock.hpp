#pragma once

#include <atomic>

namespace microtwin::sim {

// Simulated time in seconds since scenario start. One writer (the runner),
// any number of readers. Nothing in the engine reads the wall clock for
// model logic; only the runner's pacing loop does.
class SimClock {
public:
    explicit SimClock(double scale = 1.0, double tick = 0.1);

    double now() const noexcept { return epoch_.load(std::memory_order_acquire); }
    double scale() const noexcept { return scale_; }
    double tick() const noexcept { return tick_; }

    // Advances by real_elapsed * scale, floored to a multiple of tick.
    double advance(double real_elapsed);

    // Jumps to an absolute simulated time. Rejects moving backwards.
    void set(double sim_time);

private:
    std::atomic<double> epoch_{0.0};
    double scale_;
    double tick_;
};

}  // namespace microtwin::sim
