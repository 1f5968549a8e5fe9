#include "microtwin/devices/models.hpp"

#include <algorithm>
#include <cmath>

#include "microtwin/error.hpp"

namespace microtwin::devices {

std::string_view to_string(StorageMode mode) {
    switch (mode) {
    case StorageMode::Idle: return "idle";
    case StorageMode::Charge: return "charge";
    case StorageMode::Discharge: return "discharge";
    }
    return "idle";
}

std::optional<StorageMode> parse_storage_mode(std::string_view text) {
    if (text == "idle") return StorageMode::Idle;
    if (text == "charge") return StorageMode::Charge;
    if (text == "discharge") return StorageMode::Discharge;
    return std::nullopt;
}

std::string_view to_string(TurbineCommand command) { return command == TurbineCommand::Start ? "start" : "stop"; }

std::optional<TurbineCommand> parse_turbine_command(std::string_view text) {
    if (text == "start") return TurbineCommand::Start;
    if (text == "stop") return TurbineCommand::Stop;
    return std::nullopt;
}

StorageModel::StorageModel(sim::LinearStateSpace system, double capacity_kwh, double time_unit_scale)
    : system_(std::move(system)), capacity_kwh_(capacity_kwh), time_unit_scale_(time_unit_scale) {
    if (system_.states() != 1 || system_.inputs() != 2) {
        throw Error(ErrorKind::Config, "storage system must have 1 state and 2 inputs (charge, discharge)");
    }
    if (!(system_.b()(0, 0) > 0) || !(system_.b()(0, 1) < 0)) {
        throw Error(ErrorKind::Config, "storage B must raise the level on charge and lower it on discharge");
    }
    if (!(capacity_kwh_ > 0) || !(time_unit_scale_ > 0)) {
        throw Error(ErrorKind::Config, "storage capacity and time_unit_scale must be > 0");
    }
    Eigen::VectorXd x = system_.state();
    x(0) = std::clamp(x(0), 0.0, 100.0);
    system_.set_state(x);
}

double StorageModel::rated_charge_kw() const {
    return capacity_kwh_ * system_.b()(0, 0) / 100.0 * 3600.0 / time_unit_scale_;
}

double StorageModel::rated_discharge_kw() const {
    return capacity_kwh_ * -system_.b()(0, 1) / 100.0 * 3600.0 / time_unit_scale_;
}

double StorageModel::max_charge_kw(double dt) const {
    double headroom_kwh = (100.0 - level()) / 100.0 * capacity_kwh_;
    return std::max(0.0, std::min(rated_charge_kw(), headroom_kwh * 3600.0 / dt));
}

double StorageModel::max_discharge_kw(double dt) const {
    double available_kwh = level() / 100.0 * capacity_kwh_;
    return std::max(0.0, std::min(rated_discharge_kw(), available_kwh * 3600.0 / dt));
}

void StorageModel::step(double dt, double throttle) {
    throttle = std::clamp(throttle, 0.0, 1.0);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(2);
    if (mode_ == StorageMode::Charge) u(0) = throttle;
    if (mode_ == StorageMode::Discharge) u(1) = throttle;
    input_ = {u(0), u(1)};
    system_.step(u / time_unit_scale_, dt);

    Eigen::VectorXd x = system_.state();
    if (x(0) >= 100.0) {
        x(0) = 100.0;
        if (mode_ == StorageMode::Charge) mode_ = StorageMode::Idle;
    } else if (x(0) <= 0.0) {
        x(0) = 0.0;
        if (mode_ == StorageMode::Discharge) mode_ = StorageMode::Idle;
    }
    system_.set_state(x);
}

TurbineModel::TurbineModel(sim::LinearStateSpace system, double rated_kw, double ambient_c)
    : system_(std::move(system)), rated_kw_(rated_kw), ambient_c_(ambient_c) {
    if (system_.states() != 2 || system_.inputs() != 3) {
        throw Error(ErrorKind::Config,
                    "turbine system must have 2 states (rpm, exhaust) and 3 inputs (startup, ignition, outside temp)");
    }
    Eigen::VectorXd on(3);
    on << 1.0, 1.0, ambient_c_;
    nominal_rpm_ = system_.steady_state(on)(0);
    if (!(nominal_rpm_ > 0)) throw Error(ErrorKind::Config, "turbine nominal rpm must be positive");
}

void TurbineModel::step(double dt) {
    double v = running() ? 1.0 : 0.0;
    Eigen::VectorXd u(3);
    u << v, v, ambient_c_;
    system_.step(u, dt);
}

double TurbineModel::rpm() const { return std::max(0.0, system_.state()(0)); }

double TurbineModel::power_kw() const { return rated_kw_ * std::clamp(rpm() / nominal_rpm_, 0.0, 1.0); }

SolarModel::SolarModel(sim::SunSimulator sun, const sim::CallbackRegistry& registry, std::string callback,
                       std::vector<sim::CallbackArg> args)
    : sun_(std::move(sun)), fn_(registry.find(callback)), args_(std::move(args)) {}

double SolarModel::power_w(double unix_time) const {
    std::vector<sim::CallbackArg> call;
    call.reserve(args_.size() + 1);
    call.emplace_back(sun_.irradiance_at(unix_time));
    call.insert(call.end(), args_.begin(), args_.end());
    return fn_(call);
}

}  // namespace microtwin::devices
