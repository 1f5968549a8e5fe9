#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "microtwin/broker/twin_broker.hpp"
#include "microtwin/net/transport.hpp"

namespace microtwin::broker {

// /api/2/things/{thingId}/features/{feature}/properties/{property}
std::string property_path(const std::string& thing_id, const std::string& feature, const std::string& property);

/// REST facade over a TwinBroker:
///   GET /api/2/things                      -> JSON array of thing ids
///   GET /api/2/things/{id}/features/{f}/properties/{p} -> 200 scalar | 404
///   PUT same path with a JSON scalar body  -> 204 | 400 | 404
class BrokerHttpApi final : public net::HttpService {
public:
    explicit BrokerHttpApi(TwinBroker& broker) : broker_(broker) {}

    net::HttpResponse handle(const net::HttpRequest& request) override;

private:
    TwinBroker& broker_;
};

/// Typed client for BrokerHttpApi over any HttpChannel.
class BrokerClient {
public:
    explicit BrokerClient(std::unique_ptr<net::HttpChannel> channel) : channel_(std::move(channel)) {}

    Scalar get(const std::string& thing_id, const std::string& feature, const std::string& property);
    // Returns the thing revision of the write, taken from the reply's
    // ETag ("rev:N").
    std::uint64_t put(const std::string& thing_id, const std::string& feature, const std::string& property,
                      const Scalar& value);
    std::vector<std::string> things();

    net::HttpChannel& channel() noexcept { return *channel_; }

private:
    std::unique_ptr<net::HttpChannel> channel_;
};

}  // namespace microtwin::broker
