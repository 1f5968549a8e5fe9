#include "microtwin/devices/cabinet.hpp"

#include "microtwin/error.hpp"

namespace microtwin::devices {

PlcScanResult plc_scan(modbus::RegisterFile& rf) {
    const auto cons = rf.input(kConsumptionRegister).value_or(0);
    const auto maxcons = rf.input(kMaxConsumptionRegister).value_or(0);
    PlcScanResult r;
    r.trip = rf.coil(kTripCoil).value_or(false);
    if (maxcons > 0 && cons > maxcons && !r.trip) {
        rf.set_coil(kTripCoil, true);
        r.trip = true;
        r.written = true;
    }
    return r;
}

SmartCabinet::SmartCabinet(CabinetConfig config)
    : config_(std::move(config)), rf_(std::make_shared<modbus::RegisterFile>()) {
    if (config_.base_load_w < 0 || config_.max_consumption_w < 0) {
        throw Error(ErrorKind::Validation, "cabinet " + config_.building_id + ": loads must be >= 0");
    }
    if (!(config_.scan_period_s > 0)) {
        throw Error(ErrorKind::Validation, "cabinet " + config_.building_id + ": scan period must be > 0");
    }
    rf_->map_input(kConsumptionRegister, 0);
    rf_->map_input(kMaxConsumptionRegister, modbus::saturate_u16(config_.max_consumption_w));
    rf_->map_coil(kTripCoil, false);
    rf_->map_coil(kMasterCoil, true);
}

double SmartCabinet::sample(double client_load_w) {
    last_w_ = master() ? config_.base_load_w + client_load_w : 0.0;
    rf_->set_input(kConsumptionRegister, modbus::saturate_u16(last_w_));
    return last_w_;
}

TripEdge SmartCabinet::scan() {
    bool before = rf_->coil(kTripCoil).value_or(false);
    TripEdge edge = TripEdge::None;
    if (last_trip_ && !before) edge = TripEdge::Reset;
    auto r = plc_scan(*rf_);
    if (r.written) edge = TripEdge::Tripped;
    last_trip_ = r.trip;
    return edge;
}

bool SmartCabinet::master() const { return rf_->coil(kMasterCoil).value_or(false); }
bool SmartCabinet::tripped() const { return rf_->coil(kTripCoil).value_or(false); }

double cabinet_sample(SmartCabinet& cabinet, double client_load_w) { return cabinet.sample(client_load_w); }

}  // namespace microtwin::devices
