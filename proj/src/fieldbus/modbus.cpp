#include "microtwin/fieldbus/modbus.hpp"

#include <string>

#include "microtwin/error.hpp"

namespace microtwin::modbus {

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t get16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

Pdu address_count(Function f, std::uint16_t a, std::uint16_t b) {
    Pdu p{static_cast<std::uint8_t>(f), {}};
    put16(p.data, a);
    put16(p.data, b);
    return p;
}

}  // namespace

bool is_supported(std::uint8_t fc) {
    switch (static_cast<Function>(fc)) {
    case Function::ReadCoils:
    case Function::ReadHoldingRegisters:
    case Function::ReadInputRegisters:
    case Function::WriteSingleCoil:
    case Function::WriteSingleRegister:
        return true;
    }
    return false;
}

std::vector<std::uint8_t> encode(const MbapFrame& frame) {
    if (frame.protocol_id != 0) {
        throw Error(ErrorKind::Encoding, "Modbus/TCP protocol id must be 0, got " + std::to_string(frame.protocol_id));
    }
    if (frame.pdu.data.size() + 1 > kMaxPduSize) {
        throw Error(ErrorKind::Encoding, "PDU of " + std::to_string(frame.pdu.data.size() + 1) + " bytes exceeds " +
                                             std::to_string(kMaxPduSize));
    }
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + 1 + frame.pdu.data.size());
    put16(out, frame.transaction_id);
    put16(out, frame.protocol_id);
    put16(out, frame.length());
    out.push_back(frame.unit_id);
    out.push_back(frame.pdu.function);
    out.insert(out.end(), frame.pdu.data.begin(), frame.pdu.data.end());
    return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
    DecodeResult r;
    if (bytes.size() < kHeaderSize + 1) {
        return r;
    }
    std::uint16_t protocol = get16(bytes, 2);
    std::uint16_t length = get16(bytes, 4);
    if (protocol != 0 || length < 2 || length > kMaxPduSize + 1) {
        r.status = DecodeResult::Status::Malformed;
        return r;
    }
    std::size_t total = 6 + static_cast<std::size_t>(length);
    if (bytes.size() < total) {
        return r;
    }
    r.status = DecodeResult::Status::Ok;
    r.consumed = total;
    r.frame.transaction_id = get16(bytes, 0);
    r.frame.protocol_id = protocol;
    r.frame.unit_id = bytes[6];
    r.frame.pdu.function = bytes[7];
    r.frame.pdu.data.assign(bytes.begin() + 8, bytes.begin() + static_cast<std::ptrdiff_t>(total));
    return r;
}

Pdu read_coils(std::uint16_t address, std::uint16_t count) {
    return address_count(Function::ReadCoils, address, count);
}

Pdu read_holding_registers(std::uint16_t address, std::uint16_t count) {
    return address_count(Function::ReadHoldingRegisters, address, count);
}

Pdu read_input_registers(std::uint16_t address, std::uint16_t count) {
    return address_count(Function::ReadInputRegisters, address, count);
}

Pdu write_single_coil(std::uint16_t address, bool on) {
    return address_count(Function::WriteSingleCoil, address, on ? 0xFF00 : 0x0000);
}

Pdu write_single_register(std::uint16_t address, std::uint16_t value) {
    return address_count(Function::WriteSingleRegister, address, value);
}

Pdu exception_response(std::uint8_t function, ExceptionCode code) {
    return {static_cast<std::uint8_t>(function | 0x80), {static_cast<std::uint8_t>(code)}};
}

std::optional<ExceptionCode> exception_of(const Pdu& response) {
    if (!response.is_exception() || response.data.empty()) return std::nullopt;
    return static_cast<ExceptionCode>(response.data[0]);
}

std::vector<std::uint16_t> parse_registers(const Pdu& response) {
    if (response.is_exception()) {
        throw Error(ErrorKind::Transport, "Modbus exception " + std::to_string(response.data.empty() ? 0 : response.data[0]));
    }
    if (response.data.empty() || response.data[0] + 1u != response.data.size() || response.data[0] % 2 != 0) {
        throw Error(ErrorKind::Transport, "malformed register response");
    }
    std::vector<std::uint16_t> out;
    for (std::size_t i = 1; i + 1 < response.data.size(); i += 2) {
        out.push_back(get16(response.data, i));
    }
    return out;
}

std::vector<bool> parse_bits(const Pdu& response, std::uint16_t count) {
    if (response.is_exception()) {
        throw Error(ErrorKind::Transport, "Modbus exception " + std::to_string(response.data.empty() ? 0 : response.data[0]));
    }
    if (response.data.empty() || response.data[0] + 1u != response.data.size() ||
        response.data[0] * 8u < count) {
        throw Error(ErrorKind::Transport, "malformed bit response");
    }
    std::vector<bool> out;
    for (std::uint16_t i = 0; i < count; ++i) {
        out.push_back(((response.data[1 + i / 8] >> (i % 8)) & 1) != 0);
    }
    return out;
}

}  // namespace microtwin::modbus
