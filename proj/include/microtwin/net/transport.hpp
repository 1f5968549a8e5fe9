#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "microtwin/net/fabric.hpp"

namespace microtwin::net {

struct HttpRequest {
    std::string method;
    std::string path;
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string body;
    std::map<std::string, std::string> headers;
};

// Header an external client sets to name its fabric node; servers with a
// gate check it before routing.
inline constexpr const char* kSourceNodeHeader = "X-Microtwin-Node";

class HttpService {
public:
    virtual ~HttpService() = default;
    virtual HttpResponse handle(const HttpRequest& request) = 0;
};

/// Client side of an HTTP conversation between two fabric nodes. Every
/// request and every reply crosses Fabric::deliver once; a blocked request
/// throws Error(Policy), a dead peer throws Error(Transport).
class HttpChannel {
public:
    virtual ~HttpChannel() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
    virtual const std::string& source() const = 0;
    virtual const std::string& destination() const = 0;
};

std::unique_ptr<HttpChannel> make_inprocess_http_channel(Fabric& fabric, std::string src, std::string dst,
                                                         HttpService& service);

std::unique_ptr<HttpChannel> make_tcp_http_channel(Fabric& fabric, std::string src, std::string dst,
                                                   std::string host, int port);

/// Serves an HttpService on a local TCP port from a background thread.
/// Port 0 binds an ephemeral port. When `gate` is set, requests carrying
/// kSourceNodeHeader are checked against the fabric as traffic towards
/// `gate_node`.
class HttpServerHost {
public:
    HttpServerHost(HttpService& service, const std::string& host, int port, Fabric* gate = nullptr,
                   std::string gate_node = {});
    ~HttpServerHost();

    HttpServerHost(const HttpServerHost&) = delete;
    HttpServerHost& operator=(const HttpServerHost&) = delete;

    int port() const noexcept;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Byte-stream request/response channel (Modbus/TCP and friends) with the
/// same fabric semantics as HttpChannel.
class ByteChannel {
public:
    virtual ~ByteChannel() = default;
    virtual std::vector<std::uint8_t> transact(std::span<const std::uint8_t> request) = 0;
    virtual const std::string& source() const = 0;
    virtual const std::string& destination() const = 0;
};

}  // namespace microtwin::net
