#include "microtwin/ems/ems.hpp"

#include <cmath>

#include "microtwin/error.hpp"

namespace microtwin::ems {

void EmsConfig::validate() const {
    if (!(0 <= discharge_floor && discharge_floor < charge_ceiling && charge_ceiling <= 100)) {
        throw Error(ErrorKind::Validation, "ems thresholds need 0 <= discharge_floor < charge_ceiling <= 100");
    }
    if (!(turbine_threshold_kw > 0)) throw Error(ErrorKind::Validation, "ems turbine_threshold must be > 0");
    if (!(turbine_rated_kw >= 0)) throw Error(ErrorKind::Validation, "ems turbine_rated must be >= 0");
    if (!(timer_period_s > 0)) throw Error(ErrorKind::Validation, "ems timer_period must be > 0");
    if (!std::isfinite(setpoint_kw)) throw Error(ErrorKind::Validation, "ems setpoint must be finite");
}

void Measurements::validate() const {
    if (!std::isfinite(solar_kw) || !std::isfinite(consumption_kw) || !std::isfinite(storage_level)) {
        throw Error(ErrorKind::Validation, "measurements must be finite");
    }
    if (solar_kw < 0 || consumption_kw < 0) throw Error(ErrorKind::Validation, "measured power must be >= 0");
    if (storage_level < 0 || storage_level > 100) {
        throw Error(ErrorKind::Validation, "storage level must be within [0, 100]");
    }
}

std::string_view to_string(TurbineAction action) {
    switch (action) {
    case TurbineAction::None: return "none";
    case TurbineAction::Start: return "start";
    case TurbineAction::Stop: return "stop";
    }
    return "none";
}

bool charge_viable(const EmsConfig& cfg, double level) { return level < cfg.charge_ceiling; }
bool discharge_viable(const EmsConfig& cfg, double level) { return level > cfg.discharge_floor; }
bool turbine_convenient(const EmsConfig& cfg, double deficit_kw) { return deficit_kw > cfg.turbine_threshold_kw; }

ActionSet ems_tick(const EmsConfig& cfg, const Measurements& m) {
    m.validate();
    ActionSet a;
    const double balance = m.solar_kw + cfg.setpoint_kw - m.consumption_kw;
    if (balance >= 0) {
        // Storage Charge and Turbine Stop run together.
        if (charge_viable(cfg, m.storage_level)) {
            a.storage_mode = devices::StorageMode::Charge;
        } else {
            a.dissipate_surplus = true;
        }
        a.turbine = TurbineAction::Stop;
        return a;
    }
    const double deficit = -balance;
    if (discharge_viable(cfg, m.storage_level)) {
        a.storage_mode = devices::StorageMode::Discharge;
        return a;
    }
    if (turbine_convenient(cfg, deficit)) {
        a.turbine = TurbineAction::Start;
        a.grid_import_kw = std::max(0.0, deficit - cfg.turbine_rated_kw);
    } else {
        a.turbine = TurbineAction::Stop;
        a.grid_import_kw = deficit;
    }
    return a;
}

EmsProcess::EmsProcess(EmsConfig cfg, EmsBindings bindings, std::unique_ptr<historian::HistorianClient> scada)
    : cfg_(cfg), bindings_(std::move(bindings)), scada_(std::move(scada)) {
    cfg_.validate();
}

bool EmsProcess::resolve(std::string& why) {
    if (solar_xid_ && consumption_xid_ && storage_xid_ && turbine_xid_) return true;
    for (const auto& dp : scada_->get_all()) {
        if (dp.name == bindings_.solar_name) solar_xid_ = dp.xid;
        if (dp.name == bindings_.consumption_name) consumption_xid_ = dp.xid;
        if (dp.name == bindings_.storage_level_name) storage_xid_ = dp.xid;
        if (dp.name == bindings_.turbine_running_name) turbine_xid_ = dp.xid;
    }
    std::string missing;
    if (!solar_xid_) missing += " '" + bindings_.solar_name + "'";
    if (!consumption_xid_) missing += " '" + bindings_.consumption_name + "'";
    if (!storage_xid_) missing += " '" + bindings_.storage_level_name + "'";
    if (!turbine_xid_) missing += " '" + bindings_.turbine_running_name + "'";
    if (missing.empty()) return true;
    why = "datapoints not found:" + missing;
    return false;
}

double EmsProcess::read(const std::string& xid, double now, bool& stale) {
    auto s = scada_->get_latest(xid);
    if (s.timestamp < now - cfg_.timer_period_s) stale = true;
    return s.value;
}

TickRecord EmsProcess::tick(double now) {
    ++ticks_;
    TickRecord rec;
    rec.timestamp = now;
    try {
        if (!resolve(rec.reason)) {
            rec.skipped = true;
        } else {
            bool stale = false;
            rec.measurements.solar_kw = read(*solar_xid_, now, stale) * bindings_.solar_to_kw;
            rec.measurements.consumption_kw = read(*consumption_xid_, now, stale) * bindings_.consumption_to_kw;
            rec.measurements.storage_level = read(*storage_xid_, now, stale);
            rec.measurements.turbine_running = read(*turbine_xid_, now, stale) != 0.0;
            if (stale) {
                rec.skipped = true;
                rec.reason = "stale measurements";
            }
        }
        if (!rec.skipped) rec.actions = ems_tick(cfg_, rec.measurements);
    } catch (const Error& e) {
        rec.skipped = true;
        rec.reason = e.what();
    }
    if (rec.skipped) {
        ++skipped_;
        return rec;
    }

    auto send = [&](const std::string& target, const std::string& value) {
        try {
            scada_->command({target, value});
        } catch (const Error& e) {
            ++rec.command_failures;
            rec.reason += (rec.reason.empty() ? "" : "; ") + std::string(e.what());
        }
    };
    send(bindings_.storage_target, std::string(devices::to_string(rec.actions.storage_mode)));
    if (rec.actions.turbine != TurbineAction::None) {
        send(bindings_.turbine_target, std::string(to_string(rec.actions.turbine)));
    }
    return rec;
}

}  // namespace microtwin::ems
