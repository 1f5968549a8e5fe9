#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "microtwin/fieldbus/register_file.hpp"

namespace microtwin::devices {

// Register map shared by every smart cabinet.
inline constexpr std::uint16_t kConsumptionRegister = 100;  // input, W
inline constexpr std::uint16_t kMaxConsumptionRegister = 101;  // input, W
inline constexpr std::uint16_t kTripCoil = 100;
inline constexpr std::uint16_t kMasterCoil = 101;

struct CabinetConfig {
    std::string building_id;
    double base_load_w = 1500.0;
    double max_consumption_w = 10000.0;
    double scan_period_s = 0.1;
};

enum class TripEdge { None, Tripped, Reset };

struct PlcScanResult {
    bool trip = false;      // coil 100 after the scan
    bool written = false;   // the scan wrote coil 100
};

// One scan of the trip program: IF MAXCONS > 0 THEN TRIPSW := CONS > MAXCONS.
// The coil is latched: the scan only ever raises it; clearing it is a SCADA
// write.
PlcScanResult plc_scan(modbus::RegisterFile& rf);

/// A building's smart cabinet: a Modbus register file plus the trip PLC.
class SmartCabinet {
public:
    explicit SmartCabinet(CabinetConfig config);

    // Consumption = base + client load while the master coil is on, else 0.
    // Updates input 100 (saturated u16 W) and returns the unsaturated watts.
    double sample(double client_load_w);

    // Runs the PLC and reports coil 100 transitions since the last scan,
    // including a reset written by the SCADA in between.
    TripEdge scan();

    bool master() const;
    bool tripped() const;
    double last_consumption_w() const noexcept { return last_w_; }
    const CabinetConfig& config() const noexcept { return config_; }
    const std::shared_ptr<modbus::RegisterFile>& registers() const noexcept { return rf_; }

private:
    CabinetConfig config_;
    std::shared_ptr<modbus::RegisterFile> rf_;
    bool last_trip_ = false;
    double last_w_ = 0.0;
};

double cabinet_sample(SmartCabinet& cabinet, double client_load_w);

}  // namespace microtwin::devices
