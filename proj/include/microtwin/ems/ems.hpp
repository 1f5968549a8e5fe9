#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "microtwin/devices/models.hpp"
#include "microtwin/historian/historian.hpp"

namespace microtwin::ems {

struct EmsConfig {
    double charge_ceiling = 90.0;       // %
    double discharge_floor = 10.0;      // %
    double turbine_threshold_kw = 65.0;
    double turbine_rated_kw = 65.0;
    double timer_period_s = 60.0;
    double setpoint_kw = 0.0;           // tolerated grid import

    // Throws Error(Validation) unless 0 <= floor < ceiling <= 100,
    // threshold > 0, rated >= 0 and period > 0.
    void validate() const;
};

struct Measurements {
    double solar_kw = 0.0;
    double consumption_kw = 0.0;
    double storage_level = 0.0;  // %
    bool turbine_running = false;

    // Throws Error(Validation) outside the domain (negative power, level
    // outside [0, 100], non-finite values).
    void validate() const;
};

enum class TurbineAction { None, Start, Stop };
std::string_view to_string(TurbineAction action);

struct ActionSet {
    devices::StorageMode storage_mode = devices::StorageMode::Idle;
    TurbineAction turbine = TurbineAction::None;
    bool dissipate_surplus = false;
    double grid_import_kw = 0.0;  // expected, not commanded

    bool operator==(const ActionSet&) const = default;
};

bool charge_viable(const EmsConfig& cfg, double level);
bool discharge_viable(const EmsConfig& cfg, double level);
bool turbine_convenient(const EmsConfig& cfg, double deficit_kw);

// One pass of the EMS main process.
//   balance = solar + setpoint - consumption
//   balance >= 0: storage charge (or idle + dissipate when full), turbine stop
//   balance <  0: storage discharge; when the storage cannot discharge, the
//                 turbine starts if the deficit makes it convenient and the
//                 grid covers the rest
ActionSet ems_tick(const EmsConfig& cfg, const Measurements& m);

// Historian datapoint names the process reads, and command targets it writes.
struct EmsBindings {
    std::string solar_name = "Solar power";
    double solar_to_kw = 0.001;
    std::string consumption_name = "Campus consumption";
    double consumption_to_kw = 0.001;
    std::string storage_level_name = "Storage level";
    std::string turbine_running_name = "Turbine running";
    std::string storage_target = "FDT:energy-store-1/battery-pack/mode";
    std::string turbine_target = "FDT:turbine-1/turbine/command";
};

struct TickRecord {
    double timestamp = 0.0;
    bool skipped = false;
    std::string reason;  // why a tick was skipped or a command failed
    Measurements measurements;
    ActionSet actions;
    int command_failures = 0;
};

/// The timer-driven control task. It only talks to the historian API: it
/// resolves its datapoints by name through getAll, reads the latest values,
/// and sends commands. A tick whose inputs are missing or older than one
/// timer period is skipped.
class EmsProcess {
public:
    EmsProcess(EmsConfig cfg, EmsBindings bindings, std::unique_ptr<historian::HistorianClient> scada);

    TickRecord tick(double now);

    const EmsConfig& config() const noexcept { return cfg_; }
    std::uint64_t ticks() const noexcept { return ticks_; }
    std::uint64_t skipped() const noexcept { return skipped_; }

private:
    bool resolve(std::string& why);
    double read(const std::string& xid, double now, bool& stale);

    EmsConfig cfg_;
    EmsBindings bindings_;
    std::unique_ptr<historian::HistorianClient> scada_;
    std::optional<std::string> solar_xid_, consumption_xid_, storage_xid_, turbine_xid_;
    std::uint64_t ticks_ = 0;
    std::uint64_t skipped_ = 0;
};

}  // namespace microtwin::ems
