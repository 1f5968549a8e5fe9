#include "microtwin/occupancy/population.hpp"

#include <algorithm>

#include "microtwin/error.hpp"
#include "microtwin/net/fabric.hpp"

namespace microtwin::occupancy {

ClientPopulation::ClientPopulation(TurnoutModel model, std::vector<std::string> buildings, net::Fabric* fabric,
                                   std::string segment)
    : model_(std::move(model)),
      buildings_(std::move(buildings)),
      fabric_(fabric),
      segment_(std::move(segment)),
      rng_(model_.seed) {
    model_.validate();
    if (buildings_.empty()) throw Error(ErrorKind::Validation, "client population needs at least one building");
    loads_w_.assign(buildings_.size(), 0.0);
}

void ClientPopulation::refresh_loads() {
    std::fill(loads_w_.begin(), loads_w_.end(), 0.0);
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        if (clients_[i].active) loads_w_[i % buildings_.size()] += clients_[i].load_w;
    }
}

std::size_t ClientPopulation::building_index(const std::string& building) const {
    auto it = std::find(buildings_.begin(), buildings_.end(), building);
    if (it == buildings_.end()) throw Error(ErrorKind::NotFound, "unknown building '" + building + "'");
    return static_cast<std::size_t>(it - buildings_.begin());
}

void ClientPopulation::set_active(ClientEntity& c, bool active) {
    c.active = active;
    if (!fabric_) return;
    if (active) {
        fabric_->attach(c.id, segment_);
    } else {
        fabric_->detach(c.id);
    }
}

SyncDiff ClientPopulation::sync(double persons) {
    SyncDiff diff;
    std::size_t target = cluster_count(persons, model_.cluster_size);
    while (clients_.size() < target) {
        ClientEntity c;
        c.id = "client-" + std::to_string(next_id_++);
        c.cabinet = buildings_[clients_.size() % buildings_.size()];
        c.load_w = draw_client_load_w(model_, rng_);
        set_active(c, !tripped(c.cabinet));
        diff.spawned.push_back(c.id);
        clients_.push_back(std::move(c));
    }
    while (clients_.size() > target) {
        ClientEntity& c = clients_.back();
        if (c.active) set_active(c, false);
        diff.retired.push_back(c.id);
        clients_.pop_back();
    }
    if (!diff.empty()) refresh_loads();
    return diff;
}

SyncDiff ClientPopulation::trip(const std::string& building) {
    building_index(building);
    SyncDiff diff;
    tripped_.insert(building);
    for (auto& c : clients_) {
        if (c.cabinet == building && c.active) {
            set_active(c, false);
            diff.deactivated.push_back(c.id);
        }
    }
    refresh_loads();
    return diff;
}

SyncDiff ClientPopulation::reset(const std::string& building) {
    building_index(building);
    SyncDiff diff;
    if (tripped_.erase(building) == 0) return diff;
    for (auto& c : clients_) {
        if (c.cabinet == building && !c.active) {
            set_active(c, true);
            diff.reactivated.push_back(c.id);
        }
    }
    refresh_loads();
    return diff;
}

double ClientPopulation::client_load_w(const std::string& building) const {
    return loads_w_[building_index(building)];
}

std::size_t ClientPopulation::active_count() const {
    return static_cast<std::size_t>(std::count_if(clients_.begin(), clients_.end(), [](const auto& c) { return c.active; }));
}

}  // namespace microtwin::occupancy
