#include "microtwin/historian/historian.hpp"

#include <fmt/format.h>

#include <cmath>
#include <regex>

#include "microtwin/error.hpp"

namespace microtwin::historian {

namespace {

constexpr double kTimeEpsilon = 1e-9;

std::optional<bool> as_switch(const Scalar& v) {
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    if (const auto* d = std::get_if<double>(&v)) {
        if (*d == 0.0) return false;
        if (*d == 1.0) return true;
        return std::nullopt;
    }
    const auto& s = std::get<std::string>(v);
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    return std::nullopt;
}

}  // namespace

void Historian::add_modbus_device(const std::string& device, std::unique_ptr<modbus::ModbusClient> client) {
    std::lock_guard io(io_mutex_);
    if (!modbus_.emplace(device, std::move(client)).second) {
        throw Error(ErrorKind::Conflict, "modbus device '" + device + "' already registered");
    }
}

void Historian::set_broker(std::unique_ptr<broker::BrokerClient> client) {
    std::lock_guard io(io_mutex_);
    broker_ = std::move(client);
}

void Historian::register_point(Datapoint dp) {
    std::unique_lock lock(mutex_);
    if (dp.xid.empty()) throw Error(ErrorKind::Validation, "datapoint xid must not be empty");
    if (by_xid_.count(dp.xid)) throw Error(ErrorKind::Conflict, "datapoint '" + dp.xid + "' already registered");
    if (!(dp.poll_period > 0)) throw Error(ErrorKind::Validation, "datapoint '" + dp.xid + "' poll period must be > 0");
    if (const auto* m = std::get_if<ModbusSource>(&dp.source)) {
        if (m->table == modbus::Table::DiscreteInputs) {
            throw Error(ErrorKind::Validation, "datapoint '" + dp.xid + "': discrete inputs are not readable");
        }
    }
    if (const auto* d = std::get_if<DerivedSum>(&dp.source)) {
        if (d->xids.empty()) throw Error(ErrorKind::Validation, "derived datapoint '" + dp.xid + "' has no inputs");
        for (const auto& x : d->xids) {
            if (!by_xid_.count(x)) {
                throw Error(ErrorKind::Validation, "derived datapoint '" + dp.xid + "' names unknown xid '" + x + "'");
            }
        }
    }
    if (dp.name.empty()) dp.name = dp.xid;
    auto p = std::make_unique<Point>();
    p->dp = std::move(dp);
    if (stream_dir_) {
        p->csv = std::make_unique<std::ofstream>(*stream_dir_ / (p->dp.xid + ".csv"));
        *p->csv << "timestamp,value\n";
    }
    by_xid_[p->dp.xid] = p.get();
    points_.push_back(std::move(p));
}

void Historian::stream_to(const std::filesystem::path& dir) {
    std::unique_lock lock(mutex_);
    std::filesystem::create_directories(dir);
    stream_dir_ = dir;
    for (auto& p : points_) {
        p->csv = std::make_unique<std::ofstream>(dir / (p->dp.xid + ".csv"));
        if (!*p->csv) throw Error(ErrorKind::Config, "cannot write " + (dir / (p->dp.xid + ".csv")).string());
        *p->csv << "timestamp,value\n";
        for (const auto& s : p->series) *p->csv << fmt::format("{},{}\n", s.timestamp, s.value);
    }
}

void Historian::flush() {
    std::unique_lock lock(mutex_);
    for (auto& p : points_) {
        if (p->csv) p->csv->flush();
    }
}

void Historian::on_error(std::function<void(const PollError&)> sink) { error_sink_ = std::move(sink); }

std::optional<double> Historian::read_source(const Point& p, double now, std::string& why) {
    try {
        if (const auto* m = std::get_if<ModbusSource>(&p.dp.source)) {
            auto it = modbus_.find(m->device);
            if (it == modbus_.end()) {
                why = "no modbus device '" + m->device + "'";
                return std::nullopt;
            }
            switch (m->table) {
            case modbus::Table::InputRegisters: return it->second->read_input_registers(m->address, 1).at(0);
            case modbus::Table::HoldingRegisters: return it->second->read_holding_registers(m->address, 1).at(0);
            case modbus::Table::Coils: return it->second->read_coils(m->address, 1).at(0) ? 1.0 : 0.0;
            case modbus::Table::DiscreteInputs: break;
            }
            why = "unsupported table";
            return std::nullopt;
        }
        if (const auto* b = std::get_if<BrokerSource>(&p.dp.source)) {
            if (!broker_) {
                why = "no broker connection";
                return std::nullopt;
            }
            auto v = scalar_as_number(broker_->get(b->thing_id, b->feature, b->property));
            if (!v) why = "non-numeric value";
            return v;
        }
        const auto& d = std::get<DerivedSum>(p.dp.source);
        double sum = 0.0;
        std::shared_lock lock(mutex_);
        for (const auto& x : d.xids) {
            const auto& series = by_xid_.at(x)->series;
            if (series.empty() || std::abs(series.back().timestamp - now) > kTimeEpsilon) {
                why = "input '" + x + "' has no sample at this instant";
                return std::nullopt;
            }
            sum += series.back().value;
        }
        return sum;
    } catch (const Error& e) {
        why = e.what();
        return std::nullopt;
    }
}

void Historian::append(Point& p, Sample s) {
    std::unique_lock lock(mutex_);
    if (!p.series.empty() && s.timestamp <= p.series.back().timestamp) {
        throw Error(ErrorKind::Validation, "datapoint '" + p.dp.xid + "' sample timestamps must increase");
    }
    p.series.push_back(s);
    ++samples_;
    if (p.csv) *p.csv << fmt::format("{},{}\n", s.timestamp, s.value);
}

std::size_t Historian::poll_due(double now) {
    std::vector<Point*> due;
    {
        std::unique_lock lock(mutex_);
        for (auto& p : points_) {
            if (p->next_due <= now + kTimeEpsilon) {
                due.push_back(p.get());
                while (p->next_due <= now + kTimeEpsilon) p->next_due += p->dp.poll_period;
            }
        }
    }
    std::size_t stored = 0;
    std::lock_guard io(io_mutex_);
    for (Point* p : due) {
        std::string why;
        auto v = read_source(*p, now, why);
        if (v) {
            append(*p, {now, *v});
            ++stored;
            continue;
        }
        {
            std::unique_lock lock(mutex_);
            ++p->errors;
            ++errors_;
        }
        if (error_sink_) error_sink_({now, p->dp.xid, why});
    }
    return stored;
}

double Historian::next_due() const {
    std::shared_lock lock(mutex_);
    double t = INFINITY;
    for (const auto& p : points_) t = std::min(t, p->next_due);
    return t;
}

std::vector<DatapointInfo> Historian::get_all() const {
    std::shared_lock lock(mutex_);
    std::vector<DatapointInfo> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back({p->dp.name, p->dp.xid});
    return out;
}

Historian::Point& Historian::find(const std::string& xid) {
    auto it = by_xid_.find(xid);
    if (it == by_xid_.end()) throw Error(ErrorKind::NotFound, "unknown datapoint '" + xid + "'");
    return *it->second;
}

const Historian::Point& Historian::find(const std::string& xid) const {
    auto it = by_xid_.find(xid);
    if (it == by_xid_.end()) throw Error(ErrorKind::NotFound, "unknown datapoint '" + xid + "'");
    return *it->second;
}

Sample Historian::get_latest(const std::string& xid) const {
    std::shared_lock lock(mutex_);
    const auto& p = find(xid);
    if (p.series.empty()) throw Error(ErrorKind::NoData, "datapoint '" + xid + "' has no samples yet");
    return p.series.back();
}

std::vector<Sample> Historian::series(const std::string& xid) const {
    std::shared_lock lock(mutex_);
    return find(xid).series;
}

const Datapoint& Historian::datapoint(const std::string& xid) const {
    std::shared_lock lock(mutex_);
    return find(xid).dp;
}

std::uint64_t Historian::poll_errors() const {
    std::shared_lock lock(mutex_);
    return errors_;
}

std::uint64_t Historian::poll_errors(const std::string& xid) const {
    std::shared_lock lock(mutex_);
    return find(xid).errors;
}

std::uint64_t Historian::samples() const {
    std::shared_lock lock(mutex_);
    return samples_;
}

std::string Historian::issue_command(const CommandRequest& cmd) {
    static const std::regex modbus_target(R"(^modbus:([^/]+)/(coil|holding)/(\d{1,5})$)");
    static const std::regex broker_target(R"(^([^/]+)/([^/]+)/([^/]+)$)");
    std::smatch m;
    std::lock_guard io(io_mutex_);
    if (std::regex_match(cmd.target, m, modbus_target)) {
        auto it = modbus_.find(m[1]);
        if (it == modbus_.end()) throw Error(ErrorKind::NotFound, "unknown modbus device '" + m[1].str() + "'");
        unsigned long address = std::stoul(m[3]);
        if (address > 0xFFFF) throw Error(ErrorKind::Validation, "address out of range in '" + cmd.target + "'");
        auto addr = static_cast<std::uint16_t>(address);
        try {
            if (m[2] == "coil") {
                auto on = as_switch(cmd.value);
                if (!on) throw Error(ErrorKind::Validation, "coil value must be on/off, got " + scalar_to_string(cmd.value));
                it->second->write_single_coil(addr, *on);
                ++commands_;
                return fmt::format("{} = {}", cmd.target, *on ? "on" : "off");
            }
            auto v = scalar_as_number(cmd.value);
            if (!v || *v < 0 || *v > 65535 || std::floor(*v) != *v) {
                throw Error(ErrorKind::Validation, "register value must be an integer in [0, 65535]");
            }
            it->second->write_single_register(addr, static_cast<std::uint16_t>(*v));
            ++commands_;
            return fmt::format("{} = {}", cmd.target, *v);
        } catch (const modbus::ModbusError& e) {
            throw Error(e.code() == modbus::ExceptionCode::IllegalDataAddress ? ErrorKind::NotFound
                                                                              : ErrorKind::Validation,
                        e.what());
        }
    }
    if (std::regex_match(cmd.target, m, broker_target)) {
        if (!broker_) throw Error(ErrorKind::Transport, "no broker connection");
        auto rev = broker_->put(m[1], m[2], m[3], cmd.value);
        ++commands_;
        return fmt::format("{} = {} (rev {})", cmd.target, scalar_to_string(cmd.value), rev);
    }
    throw Error(ErrorKind::Validation, "command target '" + cmd.target +
                                           "' is neither thing/feature/property nor modbus:<device>/coil/<address>");
}

}  // namespace microtwin::historian
