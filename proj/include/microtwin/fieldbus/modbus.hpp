#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace microtwin::modbus {

enum class Function : std::uint8_t {
    ReadCoils = 0x01,
    ReadHoldingRegisters = 0x03,
    ReadInputRegisters = 0x04,
    WriteSingleCoil = 0x05,
    WriteSingleRegister = 0x06,
};

enum class ExceptionCode : std::uint8_t {
    IllegalFunction = 0x01,
    IllegalDataAddress = 0x02,
    IllegalDataValue = 0x03,
};

bool is_supported(std::uint8_t function_code);

struct Pdu {
    std::uint8_t function = 0;
    std::vector<std::uint8_t> data;

    bool is_exception() const noexcept { return (function & 0x80) != 0; }
    bool operator==(const Pdu&) const = default;
};

struct MbapFrame {
    std::uint16_t transaction_id = 0;
    std::uint16_t protocol_id = 0;
    std::uint8_t unit_id = 0;
    Pdu pdu;

    // MBAP length field: unit id + PDU bytes.
    std::uint16_t length() const noexcept { return static_cast<std::uint16_t>(2 + pdu.data.size()); }
    bool operator==(const MbapFrame&) const = default;
};

inline constexpr std::size_t kHeaderSize = 7;   // MBAP incl. unit id
inline constexpr std::size_t kMaxPduSize = 253;

// Big-endian wire bytes. Throws Error(Encoding) for protocol_id != 0 or a
// PDU longer than kMaxPduSize.
std::vector<std::uint8_t> encode(const MbapFrame& frame);

struct DecodeResult {
    enum class Status { Ok, NeedMoreBytes, Malformed };
    Status status = Status::NeedMoreBytes;
    MbapFrame frame;
    std::size_t consumed = 0;  // bytes of the first complete frame
};

// Decodes the first frame in `bytes`. Unknown function codes decode fine;
// rejecting them is the executor's job.
DecodeResult decode(std::span<const std::uint8_t> bytes);

// Request builders.
Pdu read_coils(std::uint16_t address, std::uint16_t count);
Pdu read_holding_registers(std::uint16_t address, std::uint16_t count);
Pdu read_input_registers(std::uint16_t address, std::uint16_t count);
Pdu write_single_coil(std::uint16_t address, bool on);
Pdu write_single_register(std::uint16_t address, std::uint16_t value);

Pdu exception_response(std::uint8_t function, ExceptionCode code);
std::optional<ExceptionCode> exception_of(const Pdu& response);

// Response readers; throw Error(Transport) on exception responses or
// truncated payloads.
std::vector<std::uint16_t> parse_registers(const Pdu& response);
std::vector<bool> parse_bits(const Pdu& response, std::uint16_t count);

}  // namespace microtwin::modbus
