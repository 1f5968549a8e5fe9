#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "microtwin/broker/http_api.hpp"
#include "microtwin/broker/twin_broker.hpp"
#include "microtwin/net/fabric.hpp"

namespace microtwin::devices {

class StorageModel;
class TurbineModel;
class SolarModel;

/// Bridges one simulated subsystem to its broker thing. Telemetry is PUT
/// over the broker HTTP API; commands arrive as change events on writable
/// properties and cross the fabric from the broker node before they apply.
class FieldController {
public:
    using Reader = std::function<Scalar()>;
    // Returns false to reject a value; the model must then be unchanged.
    using Applier = std::function<bool(const Scalar&)>;

    FieldController(std::string node, std::string thing_id, std::unique_ptr<broker::BrokerClient> client,
                    double publish_period_s = 10.0);

    void add_telemetry(std::string feature, std::string property, Reader read);
    void add_command(std::string feature, std::string property, Applier apply);

    // PUTs every telemetry binding. Returns the last revision, or nullopt
    // when any PUT failed (counted in publish_errors()).
    std::optional<std::uint64_t> publish();

    // Events whose path is not a command binding are ignored (false).
    bool apply_command(const broker::ChangeEvent& event);

    // Listens for command writes on `broker`. Events are queued until
    // process_commands(), which routes each one broker_node -> node.
    void listen(broker::TwinBroker& broker, net::Fabric& fabric, std::string broker_node);
    std::size_t process_commands();

    const std::string& node() const noexcept { return node_; }
    const std::string& thing_id() const noexcept { return thing_id_; }
    double publish_period() const noexcept { return publish_period_s_; }
    std::uint64_t publishes() const noexcept { return publishes_; }
    std::uint64_t publish_errors() const noexcept { return publish_errors_; }
    std::uint64_t rejected_commands() const noexcept { return rejected_; }
    std::uint64_t blocked_commands() const noexcept { return blocked_commands_; }
    const std::string& last_error() const noexcept { return last_error_; }

private:
    struct Telemetry {
        std::string feature, property;
        Reader read;
    };
    struct Command {
        std::string feature, property;
        Applier apply;
    };

    std::string node_;
    std::string thing_id_;
    std::unique_ptr<broker::BrokerClient> client_;
    double publish_period_s_;
    std::vector<Telemetry> telemetry_;
    std::vector<Command> commands_;

    std::vector<std::shared_ptr<broker::Subscription>> subscriptions_;
    net::Fabric* fabric_ = nullptr;
    std::string broker_node_;

    std::uint64_t publishes_ = 0;
    std::uint64_t publish_errors_ = 0;
    std::uint64_t rejected_ = 0;
    std::uint64_t blocked_commands_ = 0;
    std::string last_error_;
};

// Standard bindings for the three generation subsystems.
//   storage: battery-pack/{level, active_mode} telemetry, battery-pack/mode command
//   turbine: turbine/{rpm, exhaust_temp, power, running} telemetry, turbine/command command
//   solar:   panel/{power, irradiance} telemetry
// `now` supplies the current unix time for the solar lookup.
void bind_storage(FieldController& ctrl, StorageModel& model, const std::string& feature = "battery-pack");
void bind_turbine(FieldController& ctrl, TurbineModel& model, const std::string& feature = "turbine");
void bind_solar(FieldController& ctrl, const SolarModel& model, std::function<double()> now,
                const std::string& feature = "panel");

}  // namespace microtwin::devices
