#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <string>
#include <vector>

namespace microtwin::scenario {

// Simulated milliseconds; integer so periodic instants never drift.
using SimMillis = std::int64_t;

inline SimMillis to_millis(double seconds) { return static_cast<SimMillis>(seconds * 1000.0 + (seconds >= 0 ? 0.5 : -0.5)); }
inline double to_seconds(SimMillis ms) { return static_cast<double>(ms) / 1000.0; }

/// Discrete-event scheduler. Events fire in (time, priority, insertion)
/// order; a periodic task re-arms itself after each firing.
class Scheduler {
public:
    using Task = std::function<void(SimMillis now)>;

    void at(SimMillis time, int priority, std::string name, Task task);
    void every(SimMillis first, SimMillis period, int priority, std::string name, Task task);

    // Fires every event with time < end. `before_fire(t)` runs ahead of each
    // event (the runner uses it to pace and to move the clock).
    // Returns the number of events fired.
    std::uint64_t run_until(SimMillis end, const std::function<void(SimMillis)>& before_fire = {});

    bool empty() const noexcept { return queue_.empty(); }
    SimMillis next_time() const;
    const std::string& current() const noexcept { return current_; }

private:
    struct Event {
        SimMillis time;
        int priority;
        std::uint64_t seq;
        SimMillis period;  // 0 for one-shot
        std::size_t task;  // index into tasks_
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            if (a.priority != b.priority) return a.priority > b.priority;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::deque<std::pair<std::string, Task>> tasks_;  // stable while a task schedules more
    std::uint64_t seq_ = 0;
    std::string current_;
};

}  // namespace microtwin::scenario
