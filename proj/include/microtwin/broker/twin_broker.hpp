#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "microtwin/broker/scalar.hpp"
#include "microtwin/sim/clock.hpp"

namespace microtwin::broker {

using PropertyMap = std::map<std::string, Scalar>;
using FeatureMap = std::map<std::string, PropertyMap>;

struct ThingState {
    std::string thing_id;
    FeatureMap features;
    std::uint64_t revision = 0;
    double last_modified = 0.0;
};

struct ChangeEvent {
    std::string thing_id;
    std::string feature;
    std::string property;
    std::optional<Scalar> old_value;
    Scalar new_value;
    std::uint64_t revision = 0;
    double timestamp = 0.0;
};

// "namespace:name", both parts [A-Za-z0-9_-]+
bool valid_thing_id(const std::string& id);

/// Pattern "thing[/feature[/property]]"; any part may be "*". Missing trailing
/// parts match everything.
class PathFilter {
public:
    explicit PathFilter(const std::string& pattern);
    bool matches(const std::string& thing, const std::string& feature, const std::string& property) const;
    const std::string& pattern() const noexcept { return pattern_; }

private:
    std::string pattern_;
    std::vector<std::string> parts_;
};

/// Ordered, bounded event queue for one subscriber. When the broker cannot
/// enqueue because the buffer is full, the subscription is closed as lagged
/// and every later read throws Error(Lagged).
class Subscription {
public:
    Subscription(PathFilter filter, std::size_t capacity);

    std::optional<ChangeEvent> try_next();
    std::optional<ChangeEvent> wait_next(std::chrono::milliseconds timeout);
    std::vector<ChangeEvent> drain();

    bool lagged() const;
    bool closed() const;
    void close();
    const PathFilter& filter() const noexcept { return filter_; }

    // broker side; returns false once the subscriber is gone or lagged
    bool offer(const ChangeEvent& event);

private:
    void throw_if_lagged() const;

    PathFilter filter_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<ChangeEvent> queue_;
    bool lagged_ = false;
    bool closed_ = false;
};

/// Latest reported state of every thing, with per-thing revisions and change
/// notification. Reads run concurrently; writes to one thing are serialized
/// so its revisions and events stay in order.
class TwinBroker {
public:
    explicit TwinBroker(const sim::SimClock* clock = nullptr, std::size_t subscriber_capacity = 4096);
    ~TwinBroker();

    ThingState create_thing(const std::string& thing_id, FeatureMap features);
    std::uint64_t put_property(const std::string& thing_id, const std::string& feature,
                               const std::string& property, const Scalar& value);
    Scalar get_property(const std::string& thing_id, const std::string& feature,
                        const std::string& property) const;
    ThingState get_thing(const std::string& thing_id) const;
    std::vector<std::string> thing_ids() const;

    std::shared_ptr<Subscription> subscribe(const std::string& path_filter);

    // Appends every create/put as one JSON line. replay() rebuilds a broker
    // from such a file.
    void open_journal(const std::filesystem::path& path);
    static void replay(const std::filesystem::path& path, TwinBroker& into);

    std::uint64_t writes() const;

private:
    struct Thing {
        mutable std::shared_mutex mutex;
        ThingState state;
    };

    Thing& find(const std::string& thing_id) const;
    void publish(const ChangeEvent& event);
    void journal(const nlohmann::json& line);
    double now() const;

    const sim::SimClock* clock_;
    std::size_t subscriber_capacity_;

    mutable std::shared_mutex things_mutex_;
    std::map<std::string, std::unique_ptr<Thing>> things_;

    std::mutex subs_mutex_;
    std::vector<std::shared_ptr<Subscription>> subscriptions_;

    std::mutex journal_mutex_;
    std::ofstream journal_;

    std::atomic<std::uint64_t> writes_{0};
};

}  // namespace microtwin::broker
