#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>

#include "microtwin/fieldbus/modbus.hpp"

namespace microtwin::modbus {

enum class Table { Coils, DiscreteInputs, InputRegisters, HoldingRegisters };

/// The four Modbus data tables of one device. Only mapped addresses exist;
/// reading anything else is an illegal-data-address, never a default.
class RegisterFile {
public:
    void map_input(std::uint16_t address, std::uint16_t value = 0);
    void map_holding(std::uint16_t address, std::uint16_t value = 0);
    void map_coil(std::uint16_t address, bool value = false);
    void map_discrete(std::uint16_t address, bool value = false);

    // Device-side setters (sensor updates); the address must be mapped.
    void set_input(std::uint16_t address, std::uint16_t value);
    void set_holding(std::uint16_t address, std::uint16_t value);
    void set_coil(std::uint16_t address, bool value);

    std::optional<std::uint16_t> input(std::uint16_t address) const;
    std::optional<std::uint16_t> holding(std::uint16_t address) const;
    std::optional<bool> coil(std::uint16_t address) const;
    std::optional<bool> discrete(std::uint16_t address) const;

    // Applies one request PDU and returns the response PDU.
    Pdu execute(const Pdu& request);

    std::uint64_t version() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::uint16_t, std::uint16_t> input_;
    std::map<std::uint16_t, std::uint16_t> holding_;
    std::map<std::uint16_t, bool> coils_;
    std::map<std::uint16_t, bool> discrete_;
    std::uint64_t version_ = 0;
};

Pdu execute(RegisterFile& rf, const Pdu& request);

// Clamp a non-negative physical value into a register.
std::uint16_t saturate_u16(double value);

}  // namespace microtwin::modbus
