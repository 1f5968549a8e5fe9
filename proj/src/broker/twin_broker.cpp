#include "microtwin/broker/twin_broker.hpp"

#include <regex>

#include "microtwin/error.hpp"

namespace microtwin::broker {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

bool valid_thing_id(const std::string& id) {
    static const std::regex pattern("^[A-Za-z0-9_-]+:[A-Za-z0-9_-]+$");
    return std::regex_match(id, pattern);
}

PathFilter::PathFilter(const std::string& pattern) : pattern_(pattern), parts_(split(pattern, '/')) {
    if (pattern.empty() || parts_.size() > 3) {
        throw Error(ErrorKind::Validation, "subscription filter must be thing[/feature[/property]]: '" + pattern + "'");
    }
}

bool PathFilter::matches(const std::string& thing, const std::string& feature, const std::string& property) const {
    const std::string* actual[] = {&thing, &feature, &property};
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (parts_[i] != "*" && parts_[i] != *actual[i]) return false;
    }
    return true;
}

Subscription::Subscription(PathFilter filter, std::size_t capacity) : filter_(std::move(filter)), capacity_(capacity) {}

void Subscription::throw_if_lagged() const {
    if (lagged_) {
        throw Error(ErrorKind::Lagged, "subscription '" + filter_.pattern() + "' overflowed and was disconnected");
    }
}

std::optional<ChangeEvent> Subscription::try_next() {
    std::lock_guard lock(mutex_);
    throw_if_lagged();
    if (queue_.empty()) return std::nullopt;
    ChangeEvent e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

std::optional<ChangeEvent> Subscription::wait_next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || lagged_ || closed_; });
    throw_if_lagged();
    if (queue_.empty()) return std::nullopt;
    ChangeEvent e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

std::vector<ChangeEvent> Subscription::drain() {
    std::lock_guard lock(mutex_);
    throw_if_lagged();
    std::vector<ChangeEvent> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

bool Subscription::lagged() const {
    std::lock_guard lock(mutex_);
    return lagged_;
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

void Subscription::close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
}

bool Subscription::offer(const ChangeEvent& event) {
    std::lock_guard lock(mutex_);
    if (closed_ || lagged_) return false;
    if (queue_.size() >= capacity_) {
        lagged_ = true;
        queue_.clear();
        cv_.notify_all();
        return false;
    }
    queue_.push_back(event);
    cv_.notify_one();
    return true;
}

TwinBroker::TwinBroker(const sim::SimClock* clock, std::size_t subscriber_capacity)
    : clock_(clock), subscriber_capacity_(subscriber_capacity) {}

TwinBroker::~TwinBroker() {
    std::lock_guard lock(subs_mutex_);
    for (auto& s : subscriptions_) s->close();
}

double TwinBroker::now() const { return clock_ ? clock_->now() : 0.0; }

ThingState TwinBroker::create_thing(const std::string& thing_id, FeatureMap features) {
    if (!valid_thing_id(thing_id)) {
        throw Error(ErrorKind::Validation, "thing id '" + thing_id + "' must look like namespace:name");
    }
    std::unique_lock lock(things_mutex_);
    if (things_.count(thing_id)) {
        throw Error(ErrorKind::Conflict, "thing '" + thing_id + "' already exists");
    }
    auto thing = std::make_unique<Thing>();
    thing->state = {thing_id, std::move(features), 0, now()};
    ThingState snapshot = thing->state;
    things_.emplace(thing_id, std::move(thing));
    lock.unlock();

    nlohmann::json feats = nlohmann::json::object();
    for (const auto& [f, props] : snapshot.features) {
        feats[f] = nlohmann::json::object();
        for (const auto& [p, v] : props) feats[f][p] = scalar_to_json(v);
    }
    journal({{"op", "create"}, {"thing", thing_id}, {"features", feats}, {"t", snapshot.last_modified}});
    return snapshot;
}

TwinBroker::Thing& TwinBroker::find(const std::string& thing_id) const {
    std::shared_lock lock(things_mutex_);
    auto it = things_.find(thing_id);
    if (it == things_.end()) {
        throw Error(ErrorKind::NotFound, "thing '" + thing_id + "' not found");
    }
    return *it->second;
}

std::uint64_t TwinBroker::put_property(const std::string& thing_id, const std::string& feature,
                                       const std::string& property, const Scalar& value) {
    Thing& thing = find(thing_id);
    std::unique_lock lock(thing.mutex);
    auto fit = thing.state.features.find(feature);
    if (fit == thing.state.features.end()) {
        throw Error(ErrorKind::NotFound, "feature '" + feature + "' not found on " + thing_id);
    }
    ChangeEvent event{thing_id, feature, property, std::nullopt, value, 0, now()};
    auto pit = fit->second.find(property);
    if (pit != fit->second.end()) {
        event.old_value = pit->second;
        pit->second = value;
    } else {
        fit->second.emplace(property, value);
    }
    event.revision = ++thing.state.revision;
    thing.state.last_modified = event.timestamp;
    writes_.fetch_add(1, std::memory_order_relaxed);
    // still under the thing lock: journal lines and events keep revision order
    journal({{"op", "put"}, {"thing", thing_id}, {"feature", feature}, {"property", property},
             {"value", scalar_to_json(value)}, {"revision", event.revision}, {"t", event.timestamp}});
    publish(event);
    return event.revision;
}

Scalar TwinBroker::get_property(const std::string& thing_id, const std::string& feature,
                                const std::string& property) const {
    Thing& thing = find(thing_id);
    std::shared_lock lock(thing.mutex);
    auto fit = thing.state.features.find(feature);
    if (fit == thing.state.features.end()) {
        throw Error(ErrorKind::NotFound, "feature '" + feature + "' not found on " + thing_id);
    }
    auto pit = fit->second.find(property);
    if (pit == fit->second.end()) {
        throw Error(ErrorKind::NotFound, "property '" + property + "' not found on " + thing_id + "/" + feature);
    }
    return pit->second;
}

ThingState TwinBroker::get_thing(const std::string& thing_id) const {
    Thing& thing = find(thing_id);
    std::shared_lock lock(thing.mutex);
    return thing.state;
}

std::vector<std::string> TwinBroker::thing_ids() const {
    std::shared_lock lock(things_mutex_);
    std::vector<std::string> out;
    out.reserve(things_.size());
    for (const auto& [id, t] : things_) out.push_back(id);
    return out;
}

std::shared_ptr<Subscription> TwinBroker::subscribe(const std::string& path_filter) {
    auto sub = std::make_shared<Subscription>(PathFilter(path_filter), subscriber_capacity_);
    std::lock_guard lock(subs_mutex_);
    subscriptions_.push_back(sub);
    return sub;
}

void TwinBroker::publish(const ChangeEvent& event) {
    std::lock_guard lock(subs_mutex_);
    std::erase_if(subscriptions_, [&](const std::shared_ptr<Subscription>& s) {
        if (s.use_count() == 1 || s->closed() || s->lagged()) return true;
        if (!s->filter().matches(event.thing_id, event.feature, event.property)) return false;
        return !s->offer(event);
    });
}

std::uint64_t TwinBroker::writes() const { return writes_.load(); }

void TwinBroker::journal(const nlohmann::json& line) {
    std::lock_guard lock(journal_mutex_);
    if (journal_.is_open()) {
        journal_ << line.dump() << '\n';
    }
}

void TwinBroker::open_journal(const std::filesystem::path& path) {
    std::lock_guard lock(journal_mutex_);
    journal_.open(path, std::ios::out | std::ios::app);
    if (!journal_) {
        throw Error(ErrorKind::Config, "cannot open broker journal " + path.string());
    }
}

void TwinBroker::replay(const std::filesystem::path& path, TwinBroker& into) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot open broker journal " + path.string());
    }
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("op")) {
            throw Error(ErrorKind::Validation, "journal line " + std::to_string(n) + " is not a journal record");
        }
        if (j["op"] == "create") {
            FeatureMap features;
            for (const auto& [f, props] : j["features"].items()) {
                auto& pm = features[f];
                for (const auto& [p, v] : props.items()) pm[p] = scalar_from_json(v);
            }
            into.create_thing(j["thing"].get<std::string>(), std::move(features));
        } else if (j["op"] == "put") {
            into.put_property(j["thing"].get<std::string>(), j["feature"].get<std::string>(),
                              j["property"].get<std::string>(), scalar_from_json(j["value"]));
        }
    }
}

}  // namespace microtwin::broker
