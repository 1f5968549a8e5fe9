#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "microtwin/occupancy/turnout.hpp"

namespace microtwin::net {
class Fabric;
}

namespace microtwin::occupancy {

struct ClientEntity {
    std::string id;
    std::string cabinet;  // building id
    double load_w = 0.0;
    bool active = true;
};

struct SyncDiff {
    std::vector<std::string> spawned;
    std::vector<std::string> retired;
    std::vector<std::string> deactivated;
    std::vector<std::string> reactivated;

    bool empty() const noexcept {
        return spawned.empty() && retired.empty() && deactivated.empty() && reactivated.empty();
    }
};

/// The client machines on campus. Population slot i lives in building
/// i mod n; growth appends, shrinkage retires from the back. A tripped
/// building keeps its clients but they are inactive and off the network.
class ClientPopulation {
public:
    // `fabric` may be null (no network side effects).
    ClientPopulation(TurnoutModel model, std::vector<std::string> buildings, net::Fabric* fabric = nullptr,
                     std::string segment = "client");

    SyncDiff sync(double persons);
    SyncDiff trip(const std::string& building);
    SyncDiff reset(const std::string& building);

    bool tripped(const std::string& building) const { return tripped_.count(building) != 0; }

    // Sum of active client loads in one building, watts.
    double client_load_w(const std::string& building) const;
    std::size_t active_count() const;
    std::size_t size() const noexcept { return clients_.size(); }
    const std::vector<ClientEntity>& clients() const noexcept { return clients_; }
    const std::vector<std::string>& buildings() const noexcept { return buildings_; }
    const TurnoutModel& model() const noexcept { return model_; }

private:
    void set_active(ClientEntity& c, bool active);
    std::size_t building_index(const std::string& building) const;
    void refresh_loads();

    TurnoutModel model_;
    std::vector<std::string> buildings_;
    net::Fabric* fabric_;
    std::string segment_;
    std::mt19937_64 rng_;
    std::uint64_t next_id_ = 0;
    std::vector<ClientEntity> clients_;
    std::set<std::string> tripped_;
    std::vector<double> loads_w_;  // per building, active clients only
};

}  // namespace microtwin::occupancy
