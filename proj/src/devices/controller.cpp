#include "microtwin/devices/controller.hpp"

#include "microtwin/devices/models.hpp"
#include "microtwin/error.hpp"

namespace microtwin::devices {

FieldController::FieldController(std::string node, std::string thing_id,
                                 std::unique_ptr<broker::BrokerClient> client, double publish_period_s)
    : node_(std::move(node)),
      thing_id_(std::move(thing_id)),
      client_(std::move(client)),
      publish_period_s_(publish_period_s) {
    if (!(publish_period_s_ > 0)) throw Error(ErrorKind::Validation, "publish period must be > 0");
}

void FieldController::add_telemetry(std::string feature, std::string property, Reader read) {
    telemetry_.push_back({std::move(feature), std::move(property), std::move(read)});
}

void FieldController::add_command(std::string feature, std::string property, Applier apply) {
    commands_.push_back({std::move(feature), std::move(property), std::move(apply)});
}

std::optional<std::uint64_t> FieldController::publish() {
    std::optional<std::uint64_t> revision;
    bool failed = false;
    for (const auto& t : telemetry_) {
        try {
            revision = client_->put(thing_id_, t.feature, t.property, t.read());
        } catch (const Error& e) {
            failed = true;
            ++publish_errors_;
            last_error_ = e.what();
        }
    }
    if (failed) return std::nullopt;
    ++publishes_;
    return revision;
}

bool FieldController::apply_command(const broker::ChangeEvent& event) {
    if (event.thing_id != thing_id_) return false;
    for (const auto& c : commands_) {
        if (c.feature == event.feature && c.property == event.property) {
            if (c.apply(event.new_value)) return true;
            ++rejected_;
            last_error_ = "rejected " + c.feature + "/" + c.property + " = " + scalar_to_string(event.new_value);
            return false;
        }
    }
    return false;
}

void FieldController::listen(broker::TwinBroker& broker, net::Fabric& fabric, std::string broker_node) {
    fabric_ = &fabric;
    broker_node_ = std::move(broker_node);
    for (const auto& c : commands_) {
        subscriptions_.push_back(broker.subscribe(thing_id_ + "/" + c.feature + "/" + c.property));
    }
}

std::size_t FieldController::process_commands() {
    std::size_t applied = 0;
    for (auto& sub : subscriptions_) {
        for (const auto& ev : sub->drain()) {
            auto d = fabric_->deliver(broker_node_, node_,
                                      "event " + ev.thing_id + "/" + ev.feature + "/" + ev.property);
            if (!d.delivered) {
                ++blocked_commands_;
                continue;
            }
            if (apply_command(ev)) ++applied;
        }
    }
    return applied;
}

void bind_storage(FieldController& ctrl, StorageModel& model, const std::string& feature) {
    ctrl.add_telemetry(feature, "level", [&model] { return Scalar{model.level()}; });
    ctrl.add_telemetry(feature, "active_mode", [&model] { return Scalar{std::string(to_string(model.mode()))}; });
    ctrl.add_command(feature, "mode", [&model](const Scalar& v) {
        const auto* text = std::get_if<std::string>(&v);
        if (!text) return false;
        auto mode = parse_storage_mode(*text);
        if (!mode) return false;
        model.set_mode(*mode);
        return true;
    });
}

void bind_turbine(FieldController& ctrl, TurbineModel& model, const std::string& feature) {
    ctrl.add_telemetry(feature, "rpm", [&model] { return Scalar{model.rpm()}; });
    ctrl.add_telemetry(feature, "exhaust_temp", [&model] { return Scalar{model.exhaust_temp()}; });
    ctrl.add_telemetry(feature, "power", [&model] { return Scalar{model.power_kw() * 1000.0}; });
    ctrl.add_telemetry(feature, "running", [&model] { return Scalar{model.running()}; });
    ctrl.add_command(feature, "command", [&model](const Scalar& v) {
        const auto* text = std::get_if<std::string>(&v);
        if (!text) return false;
        auto c = parse_turbine_command(*text);
        if (!c) return false;
        model.command(*c);
        return true;
    });
}

void bind_solar(FieldController& ctrl, const SolarModel& model, std::function<double()> now,
                const std::string& feature) {
    ctrl.add_telemetry(feature, "power", [&model, now] { return Scalar{model.power_w(now())}; });
    ctrl.add_telemetry(feature, "irradiance", [&model, now] { return Scalar{model.irradiance_at(now())}; });
}

}  // namespace microtwin::devices
