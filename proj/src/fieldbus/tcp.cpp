#include "microtwin/fieldbus/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace microtwin::modbus {

namespace {

void deliver_or_throw(net::Fabric& fabric, const std::string& src, const std::string& dst, std::string_view what) {
    auto d = fabric.deliver(src, dst, what);
    if (!d.delivered) {
        throw Error(ErrorKind::Policy, src + " -> " + dst + " blocked by " + d.rule_id + " (" + std::string(what) + ")");
    }
}

std::size_t count_frames(std::span<const std::uint8_t> bytes) {
    std::size_t n = 0;
    while (true) {
        auto r = decode(bytes);
        if (r.status != DecodeResult::Status::Ok) return n;
        ++n;
        bytes = bytes.subspan(r.consumed);
    }
}

std::string describe(std::span<const std::uint8_t> bytes) {
    auto r = decode(bytes);
    if (r.status != DecodeResult::Status::Ok) return "modbus (" + std::to_string(bytes.size()) + " bytes)";
    return "modbus fc=" + std::to_string(r.frame.pdu.function) + " txn=" + std::to_string(r.frame.transaction_id);
}

bool write_all(int fd, const std::uint8_t* data, std::size_t size) {
    while (size > 0) {
        ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        data += n;
        size -= static_cast<std::size_t>(n);
    }
    return true;
}

sockaddr_in make_addr(const std::string& host, int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    std::string h = host == "localhost" ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        throw Error(ErrorKind::Config, "bad IPv4 address '" + host + "'");
    }
    return addr;
}

class InProcessModbusChannel final : public net::ByteChannel {
public:
    InProcessModbusChannel(net::Fabric& fabric, std::string src, std::string dst, std::shared_ptr<RegisterFile> rf)
        : fabric_(fabric), src_(std::move(src)), dst_(std::move(dst)), rf_(std::move(rf)) {}

    std::vector<std::uint8_t> transact(std::span<const std::uint8_t> request) override {
        deliver_or_throw(fabric_, src_, dst_, describe(request));
        auto reply = serve_frames(*rf_, request);
        deliver_or_throw(fabric_, dst_, src_, "reply " + describe(reply));
        return reply;
    }

    const std::string& source() const override { return src_; }
    const std::string& destination() const override { return dst_; }

private:
    net::Fabric& fabric_;
    std::string src_;
    std::string dst_;
    std::shared_ptr<RegisterFile> rf_;
};

class TcpModbusChannel final : public net::ByteChannel {
public:
    TcpModbusChannel(net::Fabric& fabric, std::string src, std::string dst, std::string host, int port)
        : fabric_(fabric), src_(std::move(src)), dst_(std::move(dst)), addr_(make_addr(host, port)) {}

    ~TcpModbusChannel() override { close_socket(); }

    std::vector<std::uint8_t> transact(std::span<const std::uint8_t> request) override {
        deliver_or_throw(fabric_, src_, dst_, describe(request));
        std::size_t expected = count_frames(request);
        std::vector<std::uint8_t> reply;
        {
            std::lock_guard lock(mutex_);
            // One reconnect covers a server that dropped an idle connection.
            for (int attempt = 0;; ++attempt) {
                try {
                    reply = exchange(request, expected);
                    break;
                } catch (const Error&) {
                    close_socket();
                    if (attempt == 1) throw;
                }
            }
        }
        deliver_or_throw(fabric_, dst_, src_, "reply " + describe(reply));
        return reply;
    }

    const std::string& source() const override { return src_; }
    const std::string& destination() const override { return dst_; }

private:
    std::vector<std::uint8_t> exchange(std::span<const std::uint8_t> request, std::size_t expected) {
        if (fd_ < 0) connect_socket();
        if (!write_all(fd_, request.data(), request.size())) {
            throw Error(ErrorKind::Transport, "modbus send to " + dst_ + " failed");
        }
        std::vector<std::uint8_t> buffer;
        std::uint8_t chunk[512];
        while (count_frames(buffer) < expected) {
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) throw Error(ErrorKind::Transport, "modbus connection to " + dst_ + " closed");
            buffer.insert(buffer.end(), chunk, chunk + n);
        }
        return buffer;
    }

    void connect_socket() {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw Error(ErrorKind::Transport, "socket(): " + std::string(std::strerror(errno)));
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr_), sizeof addr_) != 0) {
            std::string why = std::strerror(errno);
            close_socket();
            throw Error(ErrorKind::Transport, "modbus connect to " + dst_ + " failed: " + why);
        }
    }

    void close_socket() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

    net::Fabric& fabric_;
    std::string src_;
    std::string dst_;
    sockaddr_in addr_;
    std::mutex mutex_;
    int fd_ = -1;
};

}  // namespace

std::vector<std::uint8_t> serve_frames(RegisterFile& rf, std::span<const std::uint8_t> frames) {
    std::vector<std::uint8_t> out;
    while (true) {
        auto r = decode(frames);
        if (r.status != DecodeResult::Status::Ok) break;
        MbapFrame reply = r.frame;
        reply.pdu = rf.execute(r.frame.pdu);
        auto bytes = encode(reply);
        out.insert(out.end(), bytes.begin(), bytes.end());
        frames = frames.subspan(r.consumed);
    }
    return out;
}

ModbusTcpServer::ModbusTcpServer(std::shared_ptr<RegisterFile> rf, const std::string& host, int port)
    : rf_(std::move(rf)) {
    sockaddr_in addr = make_addr(host, port);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(ErrorKind::Transport, "socket(): " + std::string(std::strerror(errno)));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
        std::string why = std::strerror(errno);
        ::close(listen_fd_);
        throw Error(ErrorKind::Transport, "modbus bind " + host + ":" + std::to_string(port) + " failed: " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

ModbusTcpServer::~ModbusTcpServer() { stop(); }

void ModbusTcpServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    ::close(listen_fd_);
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& w : workers) w.join();
}

void ModbusTcpServer::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        int ready = ::poll(&p, 1, 200);
        if (ready <= 0) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(conn_mutex_);
        if (!running_) {
            ::close(fd);
            break;
        }
        conn_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void ModbusTcpServer::serve_connection(int fd) {
    std::vector<std::uint8_t> buffer;
    std::uint8_t chunk[1024];
    while (running_) {
        ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.insert(buffer.end(), chunk, chunk + n);
        std::span<const std::uint8_t> view(buffer);
        std::vector<std::uint8_t> out;
        bool malformed = false;
        while (true) {
            auto r = decode(view);
            if (r.status == DecodeResult::Status::Malformed) {
                malformed = true;
                break;
            }
            if (r.status == DecodeResult::Status::NeedMoreBytes) break;
            auto reply = serve_frames(*rf_, view.first(r.consumed));
            out.insert(out.end(), reply.begin(), reply.end());
            view = view.subspan(r.consumed);
        }
        if (!out.empty() && !write_all(fd, out.data(), out.size())) break;
        if (malformed) break;
        buffer.erase(buffer.begin(), buffer.end() - static_cast<std::ptrdiff_t>(view.size()));
    }
    std::lock_guard lock(conn_mutex_);
    std::erase(conn_fds_, fd);
    ::close(fd);
}

std::unique_ptr<net::ByteChannel> make_inprocess_modbus_channel(net::Fabric& fabric, std::string src,
                                                                std::string dst, std::shared_ptr<RegisterFile> rf) {
    return std::make_unique<InProcessModbusChannel>(fabric, std::move(src), std::move(dst), std::move(rf));
}

std::unique_ptr<net::ByteChannel> make_tcp_modbus_channel(net::Fabric& fabric, std::string src, std::string dst,
                                                          std::string host, int port) {
    return std::make_unique<TcpModbusChannel>(fabric, std::move(src), std::move(dst), std::move(host), port);
}

ModbusClient::ModbusClient(std::unique_ptr<net::ByteChannel> channel, std::uint8_t unit_id)
    : channel_(std::move(channel)), unit_id_(unit_id) {}

Pdu ModbusClient::transact(const Pdu& request) {
    MbapFrame frame{next_transaction_++, 0, unit_id_, request};
    auto reply = channel_->transact(encode(frame));
    auto r = decode(reply);
    if (r.status != DecodeResult::Status::Ok) {
        throw Error(ErrorKind::Transport, "malformed modbus reply from " + channel_->destination());
    }
    if (r.frame.transaction_id != frame.transaction_id) {
        throw Error(ErrorKind::Transport, "modbus transaction id mismatch: sent " +
                                              std::to_string(frame.transaction_id) + ", got " +
                                              std::to_string(r.frame.transaction_id));
    }
    if (auto code = exception_of(r.frame.pdu)) {
        throw ModbusError(*code, "modbus exception " + std::to_string(static_cast<int>(*code)) + " for function " +
                                     std::to_string(request.function));
    }
    return r.frame.pdu;
}

std::vector<std::uint16_t> ModbusClient::read_input_registers(std::uint16_t address, std::uint16_t count) {
    return parse_registers(transact(modbus::read_input_registers(address, count)));
}

std::vector<std::uint16_t> ModbusClient::read_holding_registers(std::uint16_t address, std::uint16_t count) {
    return parse_registers(transact(modbus::read_holding_registers(address, count)));
}

std::vector<bool> ModbusClient::read_coils(std::uint16_t address, std::uint16_t count) {
    return parse_bits(transact(modbus::read_coils(address, count)), count);
}

void ModbusClient::write_single_coil(std::uint16_t address, bool on) {
    transact(modbus::write_single_coil(address, on));
}

void ModbusClient::write_single_register(std::uint16_t address, std::uint16_t value) {
    transact(modbus::write_single_register(address, value));
}

}  // namespace microtwin::modbus
