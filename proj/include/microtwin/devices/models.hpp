#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "microtwin/sim/callbacks.hpp"
#include "microtwin/sim/radiance.hpp"
#include "microtwin/sim/state_space.hpp"

namespace microtwin::devices {

enum class StorageMode { Idle, Charge, Discharge };

std::string_view to_string(StorageMode mode);
std::optional<StorageMode> parse_storage_mode(std::string_view text);

/// Battery pack on a 1-state, 2-input system (charge, discharge) whose state
/// is the charge level in percent. B is expressed per `time_unit_scale`
/// seconds. Inputs are the mode vector times a throttle in [0, 1], so the
/// charge and discharge inputs are never both non-zero.
class StorageModel {
public:
    StorageModel(sim::LinearStateSpace system, double capacity_kwh = 100.0, double time_unit_scale = 1.0);

    void set_mode(StorageMode mode) noexcept { mode_ = mode; }
    StorageMode mode() const noexcept { return mode_; }
    double level() const { return system_.state()(0); }

    // Power at throttle 1.
    double rated_charge_kw() const;
    double rated_discharge_kw() const;
    // Largest flow that keeps the level inside [0, 100] over `dt`.
    double max_charge_kw(double dt) const;
    double max_discharge_kw(double dt) const;

    // Advances `dt` seconds at `throttle`. The level is clamped to [0, 100]
    // and the mode falls back to idle at a bound it was heading into.
    void step(double dt, double throttle = 1.0);

    std::vector<double> input() const { return input_; }
    const sim::LinearStateSpace& system() const noexcept { return system_; }

private:
    sim::LinearStateSpace system_;
    double capacity_kwh_;
    double time_unit_scale_;
    StorageMode mode_ = StorageMode::Idle;
    std::vector<double> input_{0.0, 0.0};
};

enum class TurbineCommand { Start, Stop };

std::string_view to_string(TurbineCommand command);
std::optional<TurbineCommand> parse_turbine_command(std::string_view text);

/// Micro-turbine on a 2-state (rpm, exhaust temperature), 3-input (startup
/// valve, ignition valve, outside temperature) system. Output power is the
/// rated power scaled by rpm over the nominal steady-state rpm, in [0, 1].
class TurbineModel {
public:
    TurbineModel(sim::LinearStateSpace system, double rated_kw = 65.0, double ambient_c = 15.0);

    void command(TurbineCommand c) noexcept { command_ = c; }
    TurbineCommand last_command() const noexcept { return command_; }
    bool running() const noexcept { return command_ == TurbineCommand::Start; }

    void step(double dt);

    double rpm() const;
    double exhaust_temp() const { return system_.state()(1); }
    double power_kw() const;
    double nominal_rpm() const noexcept { return nominal_rpm_; }
    double rated_kw() const noexcept { return rated_kw_; }
    const sim::LinearStateSpace& system() const noexcept { return system_; }

private:
    sim::LinearStateSpace system_;
    double rated_kw_;
    double ambient_c_;
    double nominal_rpm_;
    TurbineCommand command_ = TurbineCommand::Stop;
};

/// Sun table feeding a named callback: power_w = callback(irradiance, args...).
class SolarModel {
public:
    SolarModel(sim::SunSimulator sun, const sim::CallbackRegistry& registry, std::string callback,
               std::vector<sim::CallbackArg> args);

    double irradiance_at(double unix_time) const { return sun_.irradiance_at(unix_time); }
    double power_w(double unix_time) const;

private:
    sim::SunSimulator sun_;
    sim::Callback fn_;
    std::vector<sim::CallbackArg> args_;
};

}  // namespace microtwin::devices
