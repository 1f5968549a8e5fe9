#include "microtwin/scenario/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "microtwin/broker/http_api.hpp"
#include "microtwin/devices/cabinet.hpp"
#include "microtwin/devices/controller.hpp"
#include "microtwin/devices/models.hpp"
#include "microtwin/ems/ems.hpp"
#include "microtwin/error.hpp"
#include "microtwin/fieldbus/tcp.hpp"
#include "microtwin/net/transport.hpp"
#include "microtwin/occupancy/population.hpp"
#include "microtwin/scenario/scheduler.hpp"
#include "microtwin/sim/calendar.hpp"
#include "microtwin/sim/clock.hpp"
#include "microtwin/sim/radiance.hpp"

namespace microtwin::scenario {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kSecondsPerDay = 86400.0;
constexpr double kPhysicsStep = 1.0;
constexpr const char* kTurnoutFeature = "turnout";
constexpr const char* kTurnoutProperty = "persons";

enum Priority { kSync = 0, kCabinets = 1, kPhysics = 2, kPublish = 3, kPoll = 4, kEms = 5, kInject = 6 };

std::string default_feature(SimulatorKind kind) {
    switch (kind) {
    case SimulatorKind::SunTable: return "sun";
    case SimulatorKind::SolarCallback: return "panel";
    case SimulatorKind::Storage: return "battery-pack";
    case SimulatorKind::Turbine: return "turbine";
    case SimulatorKind::None: break;
    }
    return "state";
}

sim::LinearStateSpace make_system(const ThingSpec& t) {
    Eigen::MatrixXd a(t.a.size(), t.a.front().size());
    Eigen::MatrixXd b(t.b.size(), t.b.front().size());
    Eigen::VectorXd x0(t.x0.size());
    for (std::size_t i = 0; i < t.a.size(); ++i) {
        for (std::size_t j = 0; j < t.a[i].size(); ++j) a(i, j) = t.a[i][j];
        for (std::size_t j = 0; j < t.b[i].size(); ++j) b(i, j) = t.b[i][j];
        x0(i) = t.x0[i];
    }
    return sim::LinearStateSpace(a, b, x0, t.dt);
}

std::string csv_safe(std::string text) {
    for (char& c : text) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return text;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

class EventLog {
public:
    explicit EventLog(const fs::path& path) : out_(path) {
        if (!out_) throw Error(ErrorKind::Config, "cannot write " + path.string());
    }
    void write(double t, std::string_view kind, std::string_view message) {
        std::lock_guard lock(mutex_);
        out_ << fmt::format("{:.1f} {} {}\n", t, kind, message);
    }
    void flush() {
        std::lock_guard lock(mutex_);
        out_.flush();
    }

private:
    std::mutex mutex_;
    std::ofstream out_;
};

// kW, or kWh-per-hour when summed; one value per physical flow.
struct Flows {
    double solar = 0, consumption = 0, charge = 0, discharge = 0, turbine = 0, grid = 0, dissipated = 0, deficit = 0;

    void add(const Flows& f, double weight) {
        solar += f.solar * weight;
        consumption += f.consumption * weight;
        charge += f.charge * weight;
        discharge += f.discharge * weight;
        turbine += f.turbine * weight;
        grid += f.grid * weight;
        dissipated += f.dissipated * weight;
        deficit += f.deficit * weight;
    }
};

class Runtime {
public:
    Runtime(const Scenario& s, const RunOptions& o)
        : s_(s),
          out_(o.out_dir),
          raw_(o.out_dir / "raw"),
          duration_(o.duration.value_or(s.duration)),
          scale_(o.scale.value_or(s.scale)),
          seed_(o.seed.value_or(s.seed)),
          transport_(o.transport.value_or(s.transport)),
          progress_(o.progress),
          fabric_(s.policy),
          clock_(scale_, s.tick),
          broker_(&clock_),
          broker_api_(broker_),
          historian_api_(historian_) {
        if (!(duration_ >= 0)) throw Error(ErrorKind::Validation, "duration must be >= 0");
        if (!(scale_ >= 1)) throw Error(ErrorKind::Validation, "scale must be >= 1");
        if (transport_ != "tcp" && transport_ != "inproc") {
            throw Error(ErrorKind::Validation, "transport must be 'tcp' or 'inproc'");
        }
        fs::create_directories(raw_ / "series");
        log_ = std::make_unique<EventLog>(raw_ / "events.log");
    }

    ~Runtime() { shutdown(); }

    void start() {
        for (const auto& n : s_.nodes) fabric_.attach(n.id, n.segment);
        fabric_.on_blocked([this](const net::BlockedRecord& r) {
            log_->write(clock_.now(), "blocked", fmt::format("{} -> {} by {}: {}", r.src, r.dst, r.rule_id, r.payload));
        });

        start_broker();
        build_models();
        start_controllers();
        start_cabinets();
        start_historian();
        start_ems();

        occupancy::TurnoutModel model = s_.turnout;
        model.seed = seed_;
        std::vector<std::string> buildings;
        for (const auto& c : cabinets_) buildings.push_back(c->config().building_id);
        population_ = std::make_unique<occupancy::ClientPopulation>(model, buildings, &fabric_, s_.client_segment);
        turnout_client_ = std::make_unique<broker::BrokerClient>(broker_channel(s_.turnout_node));

        write_endpoints();
        write_manifest(false, "");
        schedule();
    }

    // Returns the number of events fired. Throws on a task failure.
    std::uint64_t drive() {
        const SimMillis end = to_millis(duration_);
        wall_start_ = std::chrono::steady_clock::now();
        std::uint64_t fired = scheduler_.run_until(end, [this](SimMillis t) { before_fire(t); });
        if (end > 0) {
            // closes the energy books on [duration - 1, duration]
            clock_.set(to_seconds(end));
            physics(end);
        }
        report_progress(true);
        events_ = fired;
        return fired;
    }

    void finish(bool aborted, const std::string& diagnostic) {
        if (aborted) log_->write(clock_.now(), "abort", diagnostic);
        shutdown();
        historian_.flush();
        if (ems_csv_) ems_csv_->flush();
        write_energy();
        write_counters();
        write_manifest(!aborted, diagnostic);
        log_->flush();
    }

    double wall_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start_).count();
    }
    std::uint64_t events() const noexcept { return events_; }

private:
    double unix_at(double sim_seconds) const { return s_.start_unix + sim_seconds; }

    std::unique_ptr<net::HttpChannel> broker_channel(const std::string& src) {
        if (transport_ == "tcp") return net::make_tcp_http_channel(fabric_, src, s_.broker_node, s_.host, broker_port_);
        return net::make_inprocess_http_channel(fabric_, src, s_.broker_node, broker_api_);
    }

    std::unique_ptr<net::HttpChannel> historian_channel(const std::string& src) {
        if (transport_ == "tcp") {
            return net::make_tcp_http_channel(fabric_, src, s_.historian_node, s_.host, historian_host_->port());
        }
        return net::make_inprocess_http_channel(fabric_, src, s_.historian_node, historian_api_);
    }

    void start_broker() {
        const auto* node = s_.node(s_.broker_node);
        if (transport_ == "tcp") {
            broker_host_ = std::make_unique<net::HttpServerHost>(broker_api_, s_.host, node->port);
            broker_port_ = broker_host_->port();
        }
        for (const auto& t : s_.things) {
            broker::FeatureMap features = t.features;
            for (const auto& c : s_.controllers) {
                if (c.thing_id == t.thing_id) features[c.feature.empty() ? default_feature(t.kind) : c.feature];
            }
            if (t.thing_id == s_.turnout_thing) features[kTurnoutFeature];
            broker_.create_thing(t.thing_id, std::move(features));
        }
    }

    void build_models() {
        auto registry = sim::CallbackRegistry::with_builtins();
        for (const auto& t : s_.things) {
            switch (t.kind) {
            case SimulatorKind::SunTable:
                sun_.emplace(sim::load_radiance_csv(t.source), t.reference_year);
                break;
            case SimulatorKind::Storage:
                storage_.emplace(make_system(t), t.capacity_kwh, t.time_unit_scale);
                break;
            case SimulatorKind::Turbine:
                turbine_.emplace(make_system(t), t.rated_kw, t.ambient_c);
                break;
            default: break;
            }
        }
        for (const auto& t : s_.things) {
            if (t.kind == SimulatorKind::SolarCallback) solar_.emplace(*sun_, registry, t.callback, t.callback_args);
        }
    }

    void start_controllers() {
        for (const auto& c : s_.controllers) {
            const auto* t = s_.thing(c.thing_id);
            const std::string feature = c.feature.empty() ? default_feature(t->kind) : c.feature;
            auto ctrl = std::make_unique<devices::FieldController>(
                c.node, c.thing_id, std::make_unique<broker::BrokerClient>(broker_channel(c.node)), c.publish_period);
            auto now_unix = [this] { return unix_at(clock_.now()); };
            switch (t->kind) {
            case SimulatorKind::SunTable:
                ctrl->add_telemetry(feature, "irradiance",
                                    [this, now_unix] { return Scalar{sun_->irradiance_at(now_unix())}; });
                break;
            case SimulatorKind::SolarCallback: devices::bind_solar(*ctrl, *solar_, now_unix, feature); break;
            case SimulatorKind::Storage: devices::bind_storage(*ctrl, *storage_, feature); break;
            case SimulatorKind::Turbine: devices::bind_turbine(*ctrl, *turbine_, feature); break;
            case SimulatorKind::None: break;
            }
            ctrl->listen(broker_, fabric_, s_.broker_node);
            controllers_.push_back(std::move(ctrl));
        }
    }

    void start_cabinets() {
        for (const auto& spec : s_.cabinets) {
            auto cab = std::make_unique<devices::SmartCabinet>(spec.config);
            if (transport_ == "tcp") {
                modbus_servers_.push_back(std::make_unique<modbus::ModbusTcpServer>(cab->registers(), s_.host, spec.port));
                modbus_ports_[spec.config.building_id] = modbus_servers_.back()->port();
                historian_.add_modbus_device(
                    spec.config.building_id,
                    std::make_unique<modbus::ModbusClient>(modbus::make_tcp_modbus_channel(
                        fabric_, s_.historian_node, spec.node, s_.host, modbus_servers_.back()->port())));
            } else {
                historian_.add_modbus_device(
                    spec.config.building_id,
                    std::make_unique<modbus::ModbusClient>(
                        modbus::make_inprocess_modbus_channel(fabric_, s_.historian_node, spec.node, cab->registers())));
            }
            cabinets_.push_back(std::move(cab));
        }
    }

    void start_historian() {
        historian_.set_broker(std::make_unique<broker::BrokerClient>(broker_channel(s_.historian_node)));
        for (const auto& dp : s_.datapoints) historian_.register_point(dp);
        historian_.on_error([this](const historian::PollError& e) {
            log_->write(e.timestamp, "poll-error", e.xid + ": " + e.reason);
        });
        historian_.stream_to(raw_ / "series");
        // operators reach the command API from outside the process in both modes
        const auto* node = s_.node(s_.historian_node);
        historian_host_ = std::make_unique<net::HttpServerHost>(historian_api_, s_.host, node->port, &fabric_,
                                                                s_.historian_node);
        operator_ = std::make_unique<historian::HistorianClient>(historian_channel(s_.operator_node));
    }

    void start_ems() {
        ems_ = std::make_unique<ems::EmsProcess>(s_.ems, s_.ems_bindings,
                                                 std::make_unique<historian::HistorianClient>(historian_channel(s_.ems_node)));
        ems_csv_ = std::make_unique<std::ofstream>(raw_ / "ems_ticks.csv");
        *ems_csv_ << "timestamp,skipped,reason,solar_kw,consumption_kw,storage_level,turbine_running,storage_mode,"
                     "turbine_action,command_failures,steps,p_solar_kw,p_consumption_kw,p_charge_kw,p_discharge_kw,"
                     "p_turbine_kw,p_grid_kw,p_dissipated_kw,p_deficit_kw\n";
    }

    void schedule() {
        scheduler_.every(0, to_millis(s_.turnout_sync_period), kSync, "turnout-sync", [this](SimMillis t) {
            double persons = occupancy::turnout_at(population_->model(), unix_at(to_seconds(t)));
            population_->sync(persons);
            try {
                turnout_client_->put(s_.turnout_thing, kTurnoutFeature, kTurnoutProperty, persons);
            } catch (const Error& e) {
                log_->write(to_seconds(t), "publish-error", e.what());
            }
        });
        scheduler_.every(0, to_millis(s_.sample_period), kCabinets, "cabinets", [this](SimMillis t) { cabinets(t); });
        scheduler_.every(to_millis(kPhysicsStep), to_millis(kPhysicsStep), kPhysics, "physics",
                         [this](SimMillis t) { physics(t); });
        for (auto& c : controllers_) {
            auto* ctrl = c.get();
            scheduler_.every(0, to_millis(ctrl->publish_period()), kPublish, "publish " + ctrl->node(),
                             [this, ctrl](SimMillis t) {
                                 if (!ctrl->publish()) log_->write(to_seconds(t), "publish-error", ctrl->last_error());
                             });
        }
        if (!s_.datapoints.empty()) scheduler_.at(0, kPoll, "historian", [this](SimMillis t) { poll(t); });
        scheduler_.every(0, to_millis(s_.ems.timer_period_s), kEms, "ems", [this](SimMillis t) { ems_tick(t); });
        for (const auto& inj : s_.injections) {
            scheduler_.at(to_millis(inj.at), kInject, "inject " + inj.command.target,
                          [this, cmd = inj.command](SimMillis t) {
                              try {
                                  log_->write(to_seconds(t), "inject", cmd.target + ": " + operator_->command(cmd));
                              } catch (const Error& e) {
                                  log_->write(to_seconds(t), "inject-failed", cmd.target + ": " + e.what());
                              }
                          });
        }
    }

    void before_fire(SimMillis t) {
        double sim = to_seconds(t);
        if (sim > clock_.now()) clock_.set(sim);
        auto target = wall_start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(sim / scale_));
        if (target - std::chrono::steady_clock::now() > std::chrono::milliseconds(1)) {
            std::this_thread::sleep_until(target);
        }
        if (sim >= next_progress_) report_progress(false);
    }

    void report_progress(bool final) {
        const double now = clock_.now();
        while (next_progress_ <= now) next_progress_ += kSecondsPerDay;
        if (!progress_) return;
        if (final) {
            progress_(fmt::format("done: {:.0f} sim-s in {:.1f} wall-s", duration_, wall_seconds()));
        } else if (now > 0) {
            progress_(fmt::format("day {:.0f} reached after {:.1f} wall-s", now / kSecondsPerDay, wall_seconds()));
        }
    }

    void cabinets(SimMillis t) {
        for (auto& cab : cabinets_) {
            const auto& b = cab->config().building_id;
            cab->sample(population_->client_load_w(b));
            switch (cab->scan()) {
            case devices::TripEdge::Tripped:
                population_->trip(b);
                ++trips_;
                log_->write(to_seconds(t), "trip", "building " + b);
                break;
            case devices::TripEdge::Reset:
                population_->reset(b);
                log_->write(to_seconds(t), "reset", "building " + b);
                break;
            case devices::TripEdge::None: break;
            }
        }
    }

    // Integrates [t - 1, t] and routes power around the ring: generation and
    // storage discharge on one side, consumption, storage charge and
    // dissipation on the other, the grid as slack.
    void physics(SimMillis t) {
        for (auto& c : controllers_) c->process_commands();
        const double dt = kPhysicsStep;
        const double t0 = to_seconds(t) - dt;

        Flows f;
        f.solar = solar_ ? solar_->power_w(unix_at(t0)) / 1000.0 : 0.0;
        for (const auto& cab : cabinets_) f.consumption += cab->last_consumption_w() / 1000.0;
        if (turbine_) {
            turbine_->step(dt);
            f.turbine = turbine_->power_kw();
        }
        const double balance = f.solar + f.turbine - f.consumption;
        f.deficit = std::max(0.0, -balance);
        if (storage_) {
            double throttle = 0.0;
            if (storage_->mode() == devices::StorageMode::Charge && balance > 0) {
                f.charge = std::min(balance, storage_->max_charge_kw(dt));
                throttle = f.charge / storage_->rated_charge_kw();
            } else if (storage_->mode() == devices::StorageMode::Discharge && balance < 0) {
                f.discharge = std::min(-balance, storage_->max_discharge_kw(dt));
                throttle = f.discharge / storage_->rated_discharge_kw();
            }
            storage_->step(dt, throttle);
        }
        const double rest = balance - f.charge + f.discharge;
        if (rest > 0) {
            f.dissipated = rest;
        } else {
            f.grid = -rest;
        }

        interval_.add(f, 1.0);
        ++interval_steps_;
        auto day = static_cast<std::size_t>(std::floor(t0 / kSecondsPerDay));
        if (days_.size() <= day) days_.resize(day + 1);
        days_[day].add(f, dt / 3600.0);
    }

    void poll(SimMillis t) {
        historian_.poll_due(to_seconds(t));
        SimMillis next = to_millis(historian_.next_due());
        if (next <= t) next = t + 1;
        scheduler_.at(next, kPoll, "historian", [this](SimMillis n) { poll(n); });
    }

    void ems_tick(SimMillis t) {
        auto rec = ems_->tick(to_seconds(t));
        if (rec.skipped) log_->write(rec.timestamp, "ems-skip", rec.reason);
        if (rec.command_failures > 0) log_->write(rec.timestamp, "command-failed", rec.reason);
        const double n = interval_steps_ > 0 ? static_cast<double>(interval_steps_) : 1.0;
        const auto& m = rec.measurements;
        const auto& a = rec.actions;
        *ems_csv_ << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", rec.timestamp,
                                 rec.skipped ? 1 : 0, csv_safe(rec.reason), m.solar_kw, m.consumption_kw,
                                 m.storage_level, m.turbine_running ? 1 : 0, devices::to_string(a.storage_mode),
                                 ems::to_string(a.turbine), rec.command_failures, interval_steps_, interval_.solar / n,
                                 interval_.consumption / n, interval_.charge / n, interval_.discharge / n,
                                 interval_.turbine / n, interval_.grid / n, interval_.dissipated / n,
                                 interval_.deficit / n);
        interval_ = {};
        interval_steps_ = 0;
    }

    void write_endpoints() {
        json j = {{"transport", transport_},
                  {"operatorNode", s_.operator_node},
                  {"historian", {{"host", s_.host}, {"port", historian_host_->port()}}}};
        if (broker_host_) j["broker"] = {{"host", s_.host}, {"port", broker_port_}};
        for (const auto& [b, port] : modbus_ports_) j["modbus"][b] = {{"host", s_.host}, {"port", port}};
        write_json(out_ / "endpoints.json", j);
    }

    void write_manifest(bool completed, const std::string& diagnostic) {
        json points = json::array();
        for (const auto& dp : s_.datapoints) {
            points.push_back({{"xid", dp.xid}, {"name", dp.name}, {"pollPeriod", dp.poll_period}});
        }
        json j = {{"scenario", s_.name},
                  {"start", s_.start_iso},
                  {"startUnix", s_.start_unix},
                  {"duration", duration_},
                  {"scale", scale_},
                  {"seed", seed_},
                  {"transport", transport_},
                  {"buildings", json::array()},
                  {"datapoints", points},
                  {"completed", completed}};
        for (const auto& c : s_.cabinets) j["buildings"].push_back(c.config.building_id);
        if (!diagnostic.empty()) j["diagnostic"] = diagnostic;
        write_json(raw_ / "manifest.json", j);
    }

    void write_energy() {
        std::ofstream out(raw_ / "energy.csv");
        out << "day,date,solar_kwh,consumption_kwh,storage_in_kwh,storage_out_kwh,turbine_kwh,grid_kwh,dissipated_kwh,"
               "deficit_kwh\n";
        const auto ndays = static_cast<std::size_t>(std::ceil(duration_ / kSecondsPerDay));
        if (days_.size() < ndays) days_.resize(ndays);
        for (std::size_t d = 0; d < days_.size(); ++d) {
            const auto& f = days_[d];
            auto date = sim::format_iso8601(static_cast<sim::UnixSeconds>(unix_at(d * kSecondsPerDay))).substr(0, 10);
            out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", d, date, f.solar, f.consumption, f.charge,
                               f.discharge, f.turbine, f.grid, f.dissipated, f.deficit);
        }
    }

    void write_counters() {
        json ctrls = json::object();
        for (const auto& c : controllers_) {
            ctrls[c->node()] = {{"publishes", c->publishes()},
                                {"publishErrors", c->publish_errors()},
                                {"rejectedCommands", c->rejected_commands()},
                                {"blockedCommands", c->blocked_commands()}};
        }
        json j = {{"events", events_},
                  {"wallSeconds", wall_seconds()},
                  {"fabric",
                   {{"delivered", fabric_.delivered()},
                    {"blocked", fabric_.blocked()},
                    {"blockedByRule", fabric_.blocked_by_rule()}}},
                  {"broker", {{"writes", broker_.writes()}}},
                  {"historian",
                   {{"samples", historian_.samples()},
                    {"pollErrors", historian_.poll_errors()},
                    {"commands", historian_.commands()}}},
                  {"controllers", ctrls},
                  {"trips", trips_}};
        if (ems_) j["ems"] = {{"ticks", ems_->ticks()}, {"skipped", ems_->skipped()}};
        if (population_) j["population"] = {{"clients", population_->size()}, {"active", population_->active_count()}};
        write_json(raw_ / "counters.json", j);
    }

    // devices, then historian, then EMS, then broker
    void shutdown() {
        for (auto& m : modbus_servers_) m->stop();
        if (historian_host_) historian_host_->stop();
        if (broker_host_) broker_host_->stop();
    }

    const Scenario& s_;
    fs::path out_;
    fs::path raw_;
    double duration_;
    double scale_;
    std::uint64_t seed_;
    std::string transport_;
    std::function<void(const std::string&)> progress_;

    net::Fabric fabric_;
    sim::SimClock clock_;
    broker::TwinBroker broker_;
    broker::BrokerHttpApi broker_api_;
    std::unique_ptr<net::HttpServerHost> broker_host_;
    int broker_port_ = 0;

    std::optional<sim::SunSimulator> sun_;
    std::optional<devices::SolarModel> solar_;
    std::optional<devices::StorageModel> storage_;
    std::optional<devices::TurbineModel> turbine_;
    std::vector<std::unique_ptr<devices::FieldController>> controllers_;

    std::vector<std::unique_ptr<devices::SmartCabinet>> cabinets_;
    std::vector<std::unique_ptr<modbus::ModbusTcpServer>> modbus_servers_;
    std::map<std::string, int> modbus_ports_;

    historian::Historian historian_;
    historian::HistorianHttpApi historian_api_;
    std::unique_ptr<net::HttpServerHost> historian_host_;
    std::unique_ptr<historian::HistorianClient> operator_;

    std::unique_ptr<ems::EmsProcess> ems_;
    std::unique_ptr<std::ofstream> ems_csv_;

    std::unique_ptr<occupancy::ClientPopulation> population_;
    std::unique_ptr<broker::BrokerClient> turnout_client_;

    std::unique_ptr<EventLog> log_;
    Scheduler scheduler_;
    std::chrono::steady_clock::time_point wall_start_ = std::chrono::steady_clock::now();
    double next_progress_ = 0.0;
    std::uint64_t events_ = 0;
    std::uint64_t trips_ = 0;

    Flows interval_;
    std::uint64_t interval_steps_ = 0;
    std::vector<Flows> days_;
};

}  // namespace

RunResult run(const Scenario& scenario, const RunOptions& options) {
    RunResult result;
    result.out_dir = options.out_dir;
    Runtime rt(scenario, options);
    rt.start();
    try {
        result.events = rt.drive();
    } catch (const std::exception& e) {
        result.aborted = true;
        result.diagnostic = e.what();
    }
    rt.finish(result.aborted, result.diagnostic);
    result.wall_seconds = rt.wall_seconds();
    export_csv(options.out_dir, options.out_dir);
    return result;
}

}  // namespace microtwin::scenario
