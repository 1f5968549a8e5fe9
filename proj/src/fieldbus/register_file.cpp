#include "microtwin/fieldbus/register_file.hpp"

#include <cmath>
#include <mutex>
#include <string>

#include "microtwin/error.hpp"

namespace microtwin::modbus {

namespace {

constexpr std::uint16_t kMaxRegisterCount = 125;
constexpr std::uint16_t kMaxCoilCount = 2000;

std::uint16_t get16(const std::vector<std::uint8_t>& b, std::size_t at) {
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

template <typename Map>
bool all_mapped(const Map& m, std::uint32_t first, std::uint32_t count) {
    if (first + count > 0x10000) return false;
    for (std::uint32_t a = first; a < first + count; ++a) {
        if (!m.count(static_cast<std::uint16_t>(a))) return false;
    }
    return true;
}

template <typename Map, typename V>
void set_mapped(Map& m, std::uint16_t address, V value, const char* table) {
    auto it = m.find(address);
    if (it == m.end()) {
        throw Error(ErrorKind::NotFound, std::string(table) + " " + std::to_string(address) + " is not mapped");
    }
    it->second = value;
}

template <typename Map>
auto lookup(const Map& m, std::uint16_t address) -> std::optional<typename Map::mapped_type> {
    auto it = m.find(address);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

}  // namespace

std::uint16_t saturate_u16(double value) {
    if (!(value > 0.0)) return 0;
    if (value >= 65535.0) return 65535;
    return static_cast<std::uint16_t>(std::lround(value));
}

void RegisterFile::map_input(std::uint16_t a, std::uint16_t v) {
    std::unique_lock l(mutex_);
    input_[a] = v;
    ++version_;
}
void RegisterFile::map_holding(std::uint16_t a, std::uint16_t v) {
    std::unique_lock l(mutex_);
    holding_[a] = v;
    ++version_;
}
void RegisterFile::map_coil(std::uint16_t a, bool v) {
    std::unique_lock l(mutex_);
    coils_[a] = v;
    ++version_;
}
void RegisterFile::map_discrete(std::uint16_t a, bool v) {
    std::unique_lock l(mutex_);
    discrete_[a] = v;
    ++version_;
}

void RegisterFile::set_input(std::uint16_t a, std::uint16_t v) {
    std::unique_lock l(mutex_);
    set_mapped(input_, a, v, "input register");
    ++version_;
}
void RegisterFile::set_holding(std::uint16_t a, std::uint16_t v) {
    std::unique_lock l(mutex_);
    set_mapped(holding_, a, v, "holding register");
    ++version_;
}
void RegisterFile::set_coil(std::uint16_t a, bool v) {
    std::unique_lock l(mutex_);
    set_mapped(coils_, a, v, "coil");
    ++version_;
}

std::optional<std::uint16_t> RegisterFile::input(std::uint16_t a) const {
    std::shared_lock l(mutex_);
    return lookup(input_, a);
}
std::optional<std::uint16_t> RegisterFile::holding(std::uint16_t a) const {
    std::shared_lock l(mutex_);
    return lookup(holding_, a);
}
std::optional<bool> RegisterFile::coil(std::uint16_t a) const {
    std::shared_lock l(mutex_);
    return lookup(coils_, a);
}
std::optional<bool> RegisterFile::discrete(std::uint16_t a) const {
    std::shared_lock l(mutex_);
    return lookup(discrete_, a);
}

std::uint64_t RegisterFile::version() const {
    std::shared_lock l(mutex_);
    return version_;
}

Pdu RegisterFile::execute(const Pdu& req) {
    const std::uint8_t fc = req.function;
    if (!is_supported(fc)) {
        return exception_response(fc, ExceptionCode::IllegalFunction);
    }
    if (req.data.size() != 4) {
        return exception_response(fc, ExceptionCode::IllegalDataValue);
    }
    const std::uint16_t address = get16(req.data, 0);
    const std::uint16_t operand = get16(req.data, 2);

    switch (static_cast<Function>(fc)) {
    case Function::ReadCoils: {
        if (operand == 0 || operand > kMaxCoilCount) return exception_response(fc, ExceptionCode::IllegalDataValue);
        std::shared_lock l(mutex_);
        if (!all_mapped(coils_, address, operand)) return exception_response(fc, ExceptionCode::IllegalDataAddress);
        Pdu resp{fc, {static_cast<std::uint8_t>((operand + 7) / 8)}};
        resp.data.resize(1 + resp.data[0], 0);
        for (std::uint16_t i = 0; i < operand; ++i) {
            if (coils_.at(static_cast<std::uint16_t>(address + i))) {
                resp.data[1 + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
            }
        }
        return resp;
    }
    case Function::ReadHoldingRegisters:
    case Function::ReadInputRegisters: {
        if (operand == 0 || operand > kMaxRegisterCount) {
            return exception_response(fc, ExceptionCode::IllegalDataValue);
        }
        std::shared_lock l(mutex_);
        const auto& table = static_cast<Function>(fc) == Function::ReadInputRegisters ? input_ : holding_;
        if (!all_mapped(table, address, operand)) return exception_response(fc, ExceptionCode::IllegalDataAddress);
        Pdu resp{fc, {static_cast<std::uint8_t>(operand * 2)}};
        for (std::uint16_t i = 0; i < operand; ++i) {
            std::uint16_t v = table.at(static_cast<std::uint16_t>(address + i));
            resp.data.push_back(static_cast<std::uint8_t>(v >> 8));
            resp.data.push_back(static_cast<std::uint8_t>(v & 0xFF));
        }
        return resp;
    }
    case Function::WriteSingleCoil: {
        if (operand != 0xFF00 && operand != 0x0000) return exception_response(fc, ExceptionCode::IllegalDataValue);
        std::unique_lock l(mutex_);
        auto it = coils_.find(address);
        if (it == coils_.end()) return exception_response(fc, ExceptionCode::IllegalDataAddress);
        it->second = operand == 0xFF00;
        ++version_;
        return req;
    }
    case Function::WriteSingleRegister: {
        std::unique_lock l(mutex_);
        auto it = holding_.find(address);
        if (it == holding_.end()) return exception_response(fc, ExceptionCode::IllegalDataAddress);
        it->second = operand;
        ++version_;
        return req;
    }
    }
    return exception_response(fc, ExceptionCode::IllegalFunction);
}

Pdu execute(RegisterFile& rf, const Pdu& request) { return rf.execute(request); }

}  // namespace microtwin::modbus
