#include "microtwin/scenario/scenario.hpp"

#include <fstream>
#include <set>

#include "microtwin/broker/twin_broker.hpp"
#include "microtwin/error.hpp"
#include "microtwin/sim/calendar.hpp"
#include "microtwin/sim/callbacks.hpp"

namespace microtwin::scenario {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::Validation, where + ": " + what);
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        invalid(where + "." + key, e.what());
    }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) invalid(where, "missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        invalid(where + "." + key, e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::vector<std::vector<double>> matrix(const json& j, const std::string& where) {
    std::vector<std::vector<double>> m;
    try {
        m = j.get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        invalid(where, std::string("expected a matrix of numbers: ") + e.what());
    }
    if (m.empty() || m.front().empty()) invalid(where, "matrix must not be empty");
    for (const auto& row : m) {
        if (row.size() != m.front().size()) invalid(where, "matrix rows differ in length");
    }
    return m;
}

broker::FeatureMap features(const json& j, const std::string& where) {
    broker::FeatureMap out;
    if (!j.is_object()) invalid(where, "features must be an object");
    for (const auto& [fname, fval] : j.items()) {
        const json& props = fval.contains("properties") ? fval.at("properties") : fval;
        if (!props.is_object()) invalid(where + "." + fname, "properties must be an object");
        auto& dst = out[fname];
        for (const auto& [pname, pval] : props.items()) {
            try {
                dst[pname] = scalar_from_json(pval);
            } catch (const Error& e) {
                invalid(where + "." + fname + "." + pname, e.what());
            }
        }
    }
    return out;
}

ThingSpec parse_thing(const json& j, const std::string& where, const std::filesystem::path& base) {
    ThingSpec t;
    t.thing_id = j.contains("thingId") ? require<std::string>(j, "thingId", where) : require<std::string>(j, "name", where);
    if (!broker::valid_thing_id(t.thing_id)) invalid(where, "malformed thing id '" + t.thing_id + "'");
    if (j.contains("features")) t.features = features(j.at("features"), where + ".features");
    if (!j.contains("simulator")) return t;

    const json& s = j.at("simulator");
    const std::string sw = where + ".simulator";
    auto type = require<std::string>(s, "type", sw);
    if (type == "interpolation") {
        if (s.contains("source")) {
            t.kind = SimulatorKind::SunTable;
            t.source = resolve(base, require<std::string>(s, "source", sw));
            try {
                t.mode = sim::parse_interpolation_mode(get<std::string>(s, "mode", sw, "nearest-record"));
            } catch (const Error& e) {
                invalid(sw + ".mode", e.what());
            }
            t.reference_year = get<int>(s, "referenceYear", sw, 2016);
        } else {
            t.kind = SimulatorKind::SolarCallback;
            t.input_thing = require<std::string>(s, "input", sw);
            t.callback = require<std::string>(s, "callbackName", sw);
            if (s.contains("callbackArgs")) {
                for (const auto& a : s.at("callbackArgs")) {
                    if (a.is_number()) {
                        t.callback_args.emplace_back(a.get<double>());
                    } else if (a.is_string()) {
                        t.callback_args.emplace_back(a.get<std::string>());
                    } else {
                        invalid(sw + ".callbackArgs", "arguments must be numbers or strings");
                    }
                }
            }
        }
    } else if (type == "systemSimulator") {
        auto role = require<std::string>(s, "role", sw);
        if (role == "storage") {
            t.kind = SimulatorKind::Storage;
        } else if (role == "turbine") {
            t.kind = SimulatorKind::Turbine;
        } else {
            invalid(sw + ".role", "expected 'storage' or 'turbine', got '" + role + "'");
        }
        if (!s.contains("system")) invalid(sw, "missing 'system'");
        const json& sys = s.at("system");
        if (!sys.contains("A") || !sys.contains("B")) invalid(sw + ".system", "needs 'A' and 'B'");
        t.a = matrix(sys.at("A"), sw + ".system.A");
        t.b = matrix(sys.at("B"), sw + ".system.B");
        t.x0 = require<std::vector<double>>(s, "x0", sw);
        t.inputs = require<std::vector<std::string>>(s, "inputs", sw);
        t.dt = get<double>(s, "dt", sw, 1.0);
        t.capacity_kwh = get<double>(s, "capacityKwh", sw, 100.0);
        t.time_unit_scale = get<double>(s, "timeUnitScale", sw, 1.0);
        t.rated_kw = get<double>(s, "ratedKw", sw, 65.0);
        t.ambient_c = get<double>(s, "ambientC", sw, 15.0);
    } else {
        invalid(sw + ".type", "unknown simulator type '" + type + "'");
    }
    return t;
}

historian::Source parse_source(const json& j, const std::string& where) {
    if (j.contains("broker")) {
        auto path = require<std::string>(j, "broker", where);
        auto a = path.find('/');
        auto b = a == std::string::npos ? a : path.find('/', a + 1);
        if (b == std::string::npos || path.find('/', b + 1) != std::string::npos) {
            invalid(where + ".broker", "expected thing/feature/property, got '" + path + "'");
        }
        return historian::BrokerSource{path.substr(0, a), path.substr(a + 1, b - a - 1), path.substr(b + 1)};
    }
    if (j.contains("modbus")) {
        historian::ModbusSource m;
        m.device = require<std::string>(j, "modbus", where);
        auto table = get<std::string>(j, "table", where, "input");
        if (table == "input") {
            m.table = modbus::Table::InputRegisters;
        } else if (table == "holding") {
            m.table = modbus::Table::HoldingRegisters;
        } else if (table == "coil") {
            m.table = modbus::Table::Coils;
        } else {
            invalid(where + ".table", "expected input, holding or coil");
        }
        auto address = require<int>(j, "address", where);
        if (address < 0 || address > 65535) invalid(where + ".address", "must be within 0..65535");
        m.address = static_cast<std::uint16_t>(address);
        return m;
    }
    if (j.contains("sum")) return historian::DerivedSum{require<std::vector<std::string>>(j, "sum", where)};
    invalid(where, "source needs one of 'broker', 'modbus' or 'sum'");
}

void parse_network(const json& n, Scenario& s, const std::filesystem::path& base) {
    const std::string w = "network";
    s.broker_node = get<std::string>(n, "brokerNode", w, s.broker_node);
    s.historian_node = get<std::string>(n, "historianNode", w, s.historian_node);
    s.ems_node = get<std::string>(n, "emsNode", w, s.ems_node);
    s.operator_node = get<std::string>(n, "operatorNode", w, s.operator_node);
    s.client_segment = get<std::string>(n, "clientSegment", w, s.client_segment);
    if (n.contains("policy")) {
        const json& p = n.at("policy");
        try {
            if (p.is_string() && p.get<std::string>() == "campus-default") {
                s.policy = net::Policy::campus_default();
            } else if (p.is_string()) {
                auto path = resolve(base, p.get<std::string>());
                std::ifstream in(path);
                if (!in) invalid(w + ".policy", "cannot open " + path.string());
                s.policy = net::Policy::from_json(json::parse(in));
            } else {
                s.policy = net::Policy::from_json(p);
            }
        } catch (const json::exception& e) {
            invalid(w + ".policy", e.what());
        }
    }
    s.segments = get<std::vector<std::string>>(n, "segments", w, s.policy.segments());
    if (n.contains("nodes")) {
        std::size_t i = 0;
        for (const auto& node : n.at("nodes")) {
            std::string nw = w + ".nodes[" + std::to_string(i++) + "]";
            s.nodes.push_back({require<std::string>(node, "id", nw), require<std::string>(node, "segment", nw),
                               get<int>(node, "port", nw, 0)});
        }
    }
}

}  // namespace

const ThingSpec* Scenario::thing(const std::string& id) const {
    for (const auto& t : things) {
        if (t.thing_id == id) return &t;
    }
    return nullptr;
}

const NodeSpec* Scenario::node(const std::string& id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) invalid("scenario", "top level must be an object");
    Scenario s;
    s.base_dir = base_dir;
    s.name = get<std::string>(doc, "name", "scenario", "scenario");
    s.start_iso = get<std::string>(doc, "start", "scenario", s.start_iso);
    try {
        s.start_unix = static_cast<double>(sim::parse_iso8601(s.start_iso));
    } catch (const Error& e) {
        invalid("scenario.start", e.what());
    }
    s.duration = get<double>(doc, "duration", "scenario", s.duration);
    s.seed = get<std::uint64_t>(doc, "seed", "scenario", s.seed);
    s.transport = get<std::string>(doc, "transport", "scenario", s.transport);
    s.host = get<std::string>(doc, "host", "scenario", s.host);
    if (doc.contains("clock")) {
        s.scale = get<double>(doc.at("clock"), "scale", "clock", s.scale);
        s.tick = get<double>(doc.at("clock"), "tick", "clock", s.tick);
    }

    if (doc.contains("things")) {
        std::size_t i = 0;
        for (const auto& t : doc.at("things")) {
            s.things.push_back(parse_thing(t, "things[" + std::to_string(i++) + "]", base_dir));
        }
    }

    if (doc.contains("network")) parse_network(doc.at("network"), s, base_dir);

    if (doc.contains("devices")) {
        const json& d = doc.at("devices");
        s.sample_period = get<double>(d, "samplePeriod", "devices", s.sample_period);
        double scan = get<double>(d, "scanPeriod", "devices", 0.1);
        std::size_t i = 0;
        for (const auto& c : d.value("cabinets", json::array())) {
            std::string w = "devices.cabinets[" + std::to_string(i++) + "]";
            CabinetSpec spec;
            spec.config.building_id = require<std::string>(c, "id", w);
            spec.config.base_load_w = get<double>(c, "baseLoadW", w, 1500.0);
            spec.config.max_consumption_w = get<double>(c, "maxConsumptionW", w, 10000.0);
            spec.config.scan_period_s = scan;
            spec.node = get<std::string>(c, "node", w, "cabinet-" + spec.config.building_id);
            spec.port = get<int>(c, "port", w, 0);
            s.cabinets.push_back(std::move(spec));
        }
        i = 0;
        for (const auto& c : d.value("controllers", json::array())) {
            std::string w = "devices.controllers[" + std::to_string(i++) + "]";
            s.controllers.push_back({require<std::string>(c, "node", w), require<std::string>(c, "thing", w),
                                     get<std::string>(c, "feature", w, ""), get<double>(c, "publishPeriod", w, 10.0)});
        }
        if (d.contains("turnout")) {
            s.turnout_thing = get<std::string>(d.at("turnout"), "thing", "devices.turnout", s.turnout_thing);
            s.turnout_node = get<std::string>(d.at("turnout"), "node", "devices.turnout", s.turnout_node);
        }
    }

    if (doc.contains("historian")) {
        const json& h = doc.at("historian");
        double period = get<double>(h, "pollPeriod", "historian", 10.0);
        std::size_t i = 0;
        for (const auto& p : h.value("datapoints", json::array())) {
            std::string w = "historian.datapoints[" + std::to_string(i++) + "]";
            historian::Datapoint dp;
            dp.xid = require<std::string>(p, "xid", w);
            dp.name = get<std::string>(p, "name", w, dp.xid);
            if (!p.contains("source")) invalid(w, "missing 'source'");
            dp.source = parse_source(p.at("source"), w + ".source");
            dp.poll_period = get<double>(p, "pollPeriod", w, period);
            s.datapoints.push_back(std::move(dp));
        }
    }

    if (doc.contains("ems")) {
        const json& e = doc.at("ems");
        const std::string w = "ems";
        s.ems.charge_ceiling = get<double>(e, "chargeCeiling", w, s.ems.charge_ceiling);
        s.ems.discharge_floor = get<double>(e, "dischargeFloor", w, s.ems.discharge_floor);
        s.ems.turbine_threshold_kw = get<double>(e, "turbineThresholdKw", w, s.ems.turbine_threshold_kw);
        s.ems.turbine_rated_kw = get<double>(e, "turbineRatedKw", w, s.ems.turbine_rated_kw);
        s.ems.timer_period_s = get<double>(e, "timerPeriod", w, s.ems.timer_period_s);
        s.ems.setpoint_kw = get<double>(e, "setpointKw", w, s.ems.setpoint_kw);
        if (e.contains("bindings")) {
            const json& b = e.at("bindings");
            const std::string bw = "ems.bindings";
            auto& eb = s.ems_bindings;
            eb.solar_name = get<std::string>(b, "solar", bw, eb.solar_name);
            eb.solar_to_kw = get<double>(b, "solarToKw", bw, eb.solar_to_kw);
            eb.consumption_name = get<std::string>(b, "consumption", bw, eb.consumption_name);
            eb.consumption_to_kw = get<double>(b, "consumptionToKw", bw, eb.consumption_to_kw);
            eb.storage_level_name = get<std::string>(b, "storageLevel", bw, eb.storage_level_name);
            eb.turbine_running_name = get<std::string>(b, "turbineRunning", bw, eb.turbine_running_name);
            eb.storage_target = get<std::string>(b, "storageCommand", bw, eb.storage_target);
            eb.turbine_target = get<std::string>(b, "turbineCommand", bw, eb.turbine_target);
        }
    }

    if (doc.contains("turnout")) {
        const json& t = doc.at("turnout");
        const std::string w = "turnout";
        s.turnout.cluster_size = get<int>(t, "clusterSize", w, s.turnout.cluster_size);
        s.turnout.base_load_kw = get<double>(t, "baseLoadKw", w, s.turnout.base_load_kw);
        s.turnout.mu_w = get<double>(t, "muW", w, s.turnout.mu_w);
        s.turnout.sigma_w = get<double>(t, "sigmaW", w, s.turnout.sigma_w);
        s.turnout_sync_period = get<double>(t, "syncPeriod", w, s.turnout_sync_period);
        if (t.contains("schedule")) {
            const json& sch = t.at("schedule");
            try {
                if (sch.is_string()) {
                    s.turnout.schedule = occupancy::load_schedule_csv(resolve(base_dir, sch.get<std::string>()));
                } else {
                    s.turnout.schedule = occupancy::default_schedule(get<double>(sch, "weekdayPeak", w, 1200.0),
                                                                     get<double>(sch, "weekendFraction", w, 0.1));
                }
            } catch (const Error& e) {
                invalid(w + ".schedule", e.what());
            }
        }
    }

    std::size_t i = 0;
    for (const auto& inj : doc.value("injections", json::array())) {
        std::string w = "injections[" + std::to_string(i++) + "]";
        InjectionSpec spec;
        spec.at = require<double>(inj, "at", w);
        spec.command.target = require<std::string>(inj, "target", w);
        if (!inj.contains("value")) invalid(w, "missing 'value'");
        try {
            spec.command.value = scalar_from_json(inj.at("value"));
        } catch (const Error& e) {
            invalid(w + ".value", e.what());
        }
        s.injections.push_back(std::move(spec));
    }

    validate(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open scenario " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return parse_scenario(doc, path.parent_path());
}

void validate(const Scenario& s) {
    if (!(s.duration >= 0)) invalid("scenario.duration", "must be >= 0");
    if (!(s.scale >= 1)) invalid("clock.scale", "must be >= 1");
    if (!(s.tick > 0)) invalid("clock.tick", "must be > 0");
    if (s.transport != "tcp" && s.transport != "inproc") invalid("scenario.transport", "expected 'tcp' or 'inproc'");
    if (!(s.sample_period > 0)) invalid("devices.samplePeriod", "must be > 0");

    // network
    std::set<std::string> segs(s.segments.begin(), s.segments.end());
    for (const auto& seg : s.segments) {
        if (!s.policy.has_segment(seg)) invalid("network.segments", "segment '" + seg + "' is not known to the policy");
    }
    std::set<std::string> node_ids;
    for (const auto& n : s.nodes) {
        if (!node_ids.insert(n.id).second) invalid("network.nodes", "duplicate node '" + n.id + "'");
        if (!segs.count(n.segment)) invalid("network.nodes." + n.id, "unknown segment '" + n.segment + "'");
    }
    if (!segs.count(s.client_segment)) invalid("network.clientSegment", "unknown segment '" + s.client_segment + "'");
    auto need_node = [&](const std::string& id, const std::string& where) {
        if (!node_ids.count(id)) invalid(where, "references undeclared node '" + id + "'");
    };
    need_node(s.broker_node, "network.brokerNode");
    need_node(s.historian_node, "network.historianNode");
    need_node(s.ems_node, "network.emsNode");
    need_node(s.operator_node, "network.operatorNode");

    // things
    auto registry = sim::CallbackRegistry::with_builtins();
    std::set<std::string> thing_ids;
    int sun = 0, solar = 0, storage = 0, turbine = 0;
    for (const auto& t : s.things) {
        const std::string w = "things." + t.thing_id;
        if (!thing_ids.insert(t.thing_id).second) invalid(w, "duplicate thing id");
        switch (t.kind) {
        case SimulatorKind::None: break;
        case SimulatorKind::SunTable:
            ++sun;
            if (!std::filesystem::exists(t.source)) invalid(w + ".simulator.source", "file not found: " + t.source.string());
            break;
        case SimulatorKind::SolarCallback:
            ++solar;
            if (!registry.contains(t.callback)) invalid(w + ".simulator.callbackName", "unknown callback '" + t.callback + "'");
            break;
        case SimulatorKind::Storage:
        case SimulatorKind::Turbine: {
            (t.kind == SimulatorKind::Storage ? storage : turbine)++;
            const std::size_t n = t.a.size();
            if (t.a.front().size() != n) invalid(w + ".simulator.system.A", "must be square");
            if (t.b.size() != n) invalid(w + ".simulator.system.B", "row count must equal the dimension of A");
            if (t.x0.size() != n) invalid(w + ".simulator.x0", "length must equal the dimension of A");
            if (t.inputs.size() != t.b.front().size()) {
                invalid(w + ".simulator.inputs", std::to_string(t.inputs.size()) + " input bindings for a B with " +
                                                     std::to_string(t.b.front().size()) + " columns");
            }
            std::size_t want_n = t.kind == SimulatorKind::Storage ? 1 : 2;
            std::size_t want_m = t.kind == SimulatorKind::Storage ? 2 : 3;
            if (n != want_n || t.b.front().size() != want_m) {
                invalid(w + ".simulator.system", std::string(t.kind == SimulatorKind::Storage ? "storage" : "turbine") +
                                                     " needs " + std::to_string(want_n) + " states and " +
                                                     std::to_string(want_m) + " inputs");
            }
            if (!(t.dt > 0)) invalid(w + ".simulator.dt", "must be > 0");
            if (t.kind == SimulatorKind::Storage && (!(t.capacity_kwh > 0) || !(t.time_unit_scale > 0))) {
                invalid(w + ".simulator", "capacityKwh and timeUnitScale must be > 0");
            }
            break;
        }
        }
    }
    for (const auto& t : s.things) {
        if (t.kind == SimulatorKind::SolarCallback) {
            const auto* in = s.thing(t.input_thing);
            if (!in || in->kind != SimulatorKind::SunTable) {
                invalid("things." + t.thing_id + ".simulator.input", "'" + t.input_thing + "' is not a sun table thing");
            }
        }
    }
    if (sun > 1 || solar > 1 || storage > 1 || turbine > 1) {
        invalid("things", "at most one sun table, solar panel, storage and turbine are supported");
    }
    if (!s.thing(s.turnout_thing)) invalid("devices.turnout.thing", "references undeclared thing '" + s.turnout_thing + "'");
    need_node(s.turnout_node, "devices.turnout.node");

    // devices
    std::set<std::string> buildings;
    for (const auto& c : s.cabinets) {
        const std::string w = "devices.cabinets." + c.config.building_id;
        if (!buildings.insert(c.config.building_id).second) invalid(w, "duplicate cabinet id");
        need_node(c.node, w + ".node");
        if (c.config.base_load_w < 0 || c.config.max_consumption_w < 0) invalid(w, "loads must be >= 0");
    }
    if (s.cabinets.empty()) invalid("devices.cabinets", "at least one cabinet is required");
    std::set<std::string> controlled;
    for (const auto& c : s.controllers) {
        const std::string w = "devices.controllers." + c.node;
        need_node(c.node, w + ".node");
        const auto* t = s.thing(c.thing_id);
        if (!t) invalid(w + ".thing", "references undeclared thing '" + c.thing_id + "'");
        if (t->kind == SimulatorKind::None) invalid(w + ".thing", "'" + c.thing_id + "' has no simulator");
        if (!controlled.insert(c.thing_id).second) invalid(w + ".thing", "'" + c.thing_id + "' already has a controller");
        if (!(c.publish_period > 0)) invalid(w + ".publishPeriod", "must be > 0");
    }
    for (const auto& t : s.things) {
        if (t.kind != SimulatorKind::None && !controlled.count(t.thing_id)) {
            invalid("things." + t.thing_id, "simulated thing has no controller");
        }
    }

    // historian
    std::set<std::string> xids;
    std::set<std::string> names;
    for (const auto& dp : s.datapoints) {
        const std::string w = "historian.datapoints." + dp.xid;
        if (!xids.insert(dp.xid).second) invalid(w, "duplicate xid");
        names.insert(dp.name);
        if (!(dp.poll_period > 0)) invalid(w + ".pollPeriod", "must be > 0");
        if (const auto* b = std::get_if<historian::BrokerSource>(&dp.source)) {
            const auto* t = s.thing(b->thing_id);
            if (!t) invalid(w + ".source", "references undeclared thing '" + b->thing_id + "'");
        } else if (const auto* m = std::get_if<historian::ModbusSource>(&dp.source)) {
            if (!buildings.count(m->device)) invalid(w + ".source", "references undeclared cabinet '" + m->device + "'");
        } else {
            for (const auto& x : std::get<historian::DerivedSum>(dp.source).xids) {
                if (!xids.count(x) || x == dp.xid) {
                    invalid(w + ".source", "sum references '" + x + "', which is not declared before it");
                }
            }
        }
    }

    // ems
    try {
        s.ems.validate();
    } catch (const Error& e) {
        invalid("ems", e.what());
    }
    for (const auto& n : {s.ems_bindings.solar_name, s.ems_bindings.consumption_name,
                          s.ems_bindings.storage_level_name, s.ems_bindings.turbine_running_name}) {
        if (!names.count(n)) invalid("ems.bindings", "no datapoint named '" + n + "'");
    }

    // turnout
    try {
        s.turnout.validate();
    } catch (const Error& e) {
        invalid("turnout", e.what());
    }
    if (!(s.turnout_sync_period > 0)) invalid("turnout.syncPeriod", "must be > 0");

    for (const auto& inj : s.injections) {
        if (!(inj.at >= 0)) invalid("injections", "'at' must be >= 0");
    }
}

}  // namespace microtwin::scenario
