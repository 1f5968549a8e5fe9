#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "microtwin/broker/http_api.hpp"
#include "microtwin/broker/scalar.hpp"
#include "microtwin/fieldbus/tcp.hpp"

namespace microtwin::historian {

struct ModbusSource {
    std::string device;  // cabinet id registered with add_modbus_device
    modbus::Table table = modbus::Table::InputRegisters;
    std::uint16_t address = 0;
};

struct BrokerSource {
    std::string thing_id;
    std::string feature;
    std::string property;
};

// Sum of other points sampled at the same instant.
struct DerivedSum {
    std::vector<std::string> xids;
};

using Source = std::variant<ModbusSource, BrokerSource, DerivedSum>;

struct Datapoint {
    std::string xid;
    std::string name;
    Source source;
    double poll_period = 10.0;
};

struct Sample {
    double timestamp;
    double value;
};

struct DatapointInfo {
    std::string name;
    std::string xid;
};

struct CommandRequest {
    // "thing/feature/property" or "modbus:<device>/coil/<address>"
    std::string target;
    Scalar value;
};

struct PollError {
    double timestamp;
    std::string xid;
    std::string reason;
};

/// Mini SCADA: named time series polled from Modbus devices and broker
/// properties, plus the command path back to the field. Series are
/// append-only with strictly increasing timestamps; a failed poll leaves a
/// gap and never a made-up value.
class Historian {
public:
    Historian() = default;

    void add_modbus_device(const std::string& device, std::unique_ptr<modbus::ModbusClient> client);
    void set_broker(std::unique_ptr<broker::BrokerClient> client);

    // Throws Conflict on a duplicate xid and Validation on a bad period or a
    // derived point naming an unknown xid.
    void register_point(Datapoint dp);

    // Polls every point due at `now` (registration order, derived points
    // after their inputs). Returns the number of samples stored.
    std::size_t poll_due(double now);
    // Earliest instant any point is due.
    double next_due() const;

    std::vector<DatapointInfo> get_all() const;
    Sample get_latest(const std::string& xid) const;
    std::vector<Sample> series(const std::string& xid) const;
    const Datapoint& datapoint(const std::string& xid) const;

    // Acknowledgement text on success; throws on failure (NotFound for an
    // unknown target, Validation for a bad value, Policy / Transport when
    // the field cannot be reached).
    std::string issue_command(const CommandRequest& cmd);

    // Streams each new sample to <dir>/<xid>.csv as `timestamp,value`.
    void stream_to(const std::filesystem::path& dir);
    void flush();
    void on_error(std::function<void(const PollError&)> sink);

    std::uint64_t poll_errors() const;
    std::uint64_t poll_errors(const std::string& xid) const;
    std::uint64_t samples() const;
    std::uint64_t commands() const { return commands_; }

private:
    struct Point {
        Datapoint dp;
        std::vector<Sample> series;
        double next_due = 0.0;
        std::uint64_t errors = 0;
        std::unique_ptr<std::ofstream> csv;
    };

    std::optional<double> read_source(const Point& p, double now, std::string& why);
    void append(Point& p, Sample s);
    Point& find(const std::string& xid);
    const Point& find(const std::string& xid) const;

    mutable std::shared_mutex mutex_;  // point table and series
    std::mutex io_mutex_;              // field clients
    std::vector<std::unique_ptr<Point>> points_;
    std::map<std::string, Point*> by_xid_;
    std::map<std::string, std::unique_ptr<modbus::ModbusClient>> modbus_;
    std::unique_ptr<broker::BrokerClient> broker_;
    std::optional<std::filesystem::path> stream_dir_;
    std::function<void(const PollError&)> error_sink_;
    std::uint64_t errors_ = 0;
    std::uint64_t samples_ = 0;
    std::uint64_t commands_ = 0;
};

/// REST facade:
///   GET  /datapoint/getAll        -> [{"name", "xid"}]
///   GET  /datapoint/{xid}/latest  -> {"timestamp", "value"} | 404
///   POST /command {target, value} -> 200 {"ack"} | 400 | 404 | 502
class HistorianHttpApi final : public net::HttpService {
public:
    explicit HistorianHttpApi(Historian& historian) : historian_(historian) {}
    net::HttpResponse handle(const net::HttpRequest& request) override;

private:
    Historian& historian_;
};

/// Typed client for HistorianHttpApi; errors map back to their kinds.
class HistorianClient {
public:
    explicit HistorianClient(std::unique_ptr<net::HttpChannel> channel) : channel_(std::move(channel)) {}

    std::vector<DatapointInfo> get_all();
    Sample get_latest(const std::string& xid);
    std::string command(const CommandRequest& cmd);

private:
    std::unique_ptr<net::HttpChannel> channel_;
};

}  // namespace microtwin::historian
