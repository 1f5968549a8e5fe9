#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "microtwin/error.hpp"
#include "microtwin/fieldbus/register_file.hpp"
#include "microtwin/net/transport.hpp"

namespace microtwin::modbus {

// Handles every complete request frame in `frames` against `rf` and returns
// the concatenated responses, in request order. Trailing partial bytes are
// ignored.
std::vector<std::uint8_t> serve_frames(RegisterFile& rf, std::span<const std::uint8_t> frames);

/// Modbus/TCP server for one register file. One thread accepts, one thread
/// per connection answers pipelined requests in order.
class ModbusTcpServer {
public:
    ModbusTcpServer(std::shared_ptr<RegisterFile> rf, const std::string& host, int port);
    ~ModbusTcpServer();

    ModbusTcpServer(const ModbusTcpServer&) = delete;
    ModbusTcpServer& operator=(const ModbusTcpServer&) = delete;

    int port() const noexcept { return port_; }
    void stop();

private:
    void accept_loop();
    void serve_connection(int fd);

    std::shared_ptr<RegisterFile> rf_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{true};
    std::thread acceptor_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::thread> workers_;
};

std::unique_ptr<net::ByteChannel> make_inprocess_modbus_channel(net::Fabric& fabric, std::string src,
                                                                std::string dst, std::shared_ptr<RegisterFile> rf);

std::unique_ptr<net::ByteChannel> make_tcp_modbus_channel(net::Fabric& fabric, std::string src, std::string dst,
                                                          std::string host, int port);

class ModbusError : public Error {
public:
    ModbusError(ExceptionCode code, const std::string& what) : Error(ErrorKind::Validation, what), code_(code) {}
    ExceptionCode code() const noexcept { return code_; }

private:
    ExceptionCode code_;
};

/// Master side: builds frames, checks transaction ids, turns exception
/// responses into ModbusError.
class ModbusClient {
public:
    explicit ModbusClient(std::unique_ptr<net::ByteChannel> channel, std::uint8_t unit_id = 1);

    std::vector<std::uint16_t> read_input_registers(std::uint16_t address, std::uint16_t count);
    std::vector<std::uint16_t> read_holding_registers(std::uint16_t address, std::uint16_t count);
    std::vector<bool> read_coils(std::uint16_t address, std::uint16_t count);
    void write_single_coil(std::uint16_t address, bool on);
    void write_single_register(std::uint16_t address, std::uint16_t value);

    Pdu transact(const Pdu& request);

private:
    std::unique_ptr<net::ByteChannel> channel_;
    std::uint8_t unit_id_;
    std::uint16_t next_transaction_ = 1;
};

}  // namespace microtwin::modbus
