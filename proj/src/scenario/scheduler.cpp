#include "microtwin/scenario/scheduler.hpp"

#include <limits>

#include "microtwin/error.hpp"

namespace microtwin::scenario {

void Scheduler::at(SimMillis time, int priority, std::string name, Task task) {
    tasks_.emplace_back(std::move(name), std::move(task));
    queue_.push({time, priority, seq_++, 0, tasks_.size() - 1});
}

void Scheduler::every(SimMillis first, SimMillis period, int priority, std::string name, Task task) {
    if (period <= 0) throw Error(ErrorKind::Validation, "periodic task '" + name + "' needs a positive period");
    tasks_.emplace_back(std::move(name), std::move(task));
    queue_.push({first, priority, seq_++, period, tasks_.size() - 1});
}

SimMillis Scheduler::next_time() const {
    return queue_.empty() ? std::numeric_limits<SimMillis>::max() : queue_.top().time;
}

std::uint64_t Scheduler::run_until(SimMillis end, const std::function<void(SimMillis)>& before_fire) {
    std::uint64_t fired = 0;
    while (!queue_.empty() && queue_.top().time < end) {
        Event ev = queue_.top();
        queue_.pop();
        if (before_fire) before_fire(ev.time);
        auto& [name, task] = tasks_[ev.task];
        current_ = name;
        task(ev.time);
        ++fired;
        if (ev.period > 0) {
            ev.time += ev.period;
            ev.seq = seq_++;
            queue_.push(ev);
        }
    }
    current_.clear();
    return fired;
}

}  // namespace microtwin::scenario
