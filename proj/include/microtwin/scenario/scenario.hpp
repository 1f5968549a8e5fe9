#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "microtwin/broker/scalar.hpp"
#include "microtwin/devices/cabinet.hpp"
#include "microtwin/ems/ems.hpp"
#include "microtwin/historian/historian.hpp"
#include "microtwin/net/policy.hpp"
#include "microtwin/occupancy/turnout.hpp"
#include "microtwin/sim/callbacks.hpp"
#include "microtwin/sim/interpolation.hpp"

namespace microtwin::scenario {

enum class SimulatorKind { None, SunTable, SolarCallback, Storage, Turbine };

struct ThingSpec {
    std::string thing_id;
    broker::FeatureMap features;
    SimulatorKind kind = SimulatorKind::None;

    // SunTable
    std::filesystem::path source;
    sim::InterpolationMode mode = sim::InterpolationMode::NearestRecord;
    int reference_year = 2016;

    // SolarCallback
    std::string input_thing;
    std::string callback;
    std::vector<sim::CallbackArg> callback_args;

    // Storage / Turbine
    std::vector<std::vector<double>> a, b;
    std::vector<double> x0;
    std::vector<std::string> inputs;
    double dt = 1.0;
    double capacity_kwh = 100.0;
    double time_unit_scale = 1.0;
    double rated_kw = 65.0;
    double ambient_c = 15.0;
};

struct CabinetSpec {
    devices::CabinetConfig config;
    std::string node;
    int port = 0;
};

struct ControllerSpec {
    std::string node;
    std::string thing_id;
    std::string feature;
    double publish_period = 10.0;
};

struct NodeSpec {
    std::string id;
    std::string segment;
    int port = 0;  // services only
};

struct InjectionSpec {
    double at = 0.0;
    historian::CommandRequest command;
};

struct Scenario {
    std::string name;
    std::filesystem::path base_dir;
    std::string start_iso = "2016-06-06T00:00:00Z";
    double start_unix = 0.0;
    double duration = 604800.0;
    std::uint64_t seed = 42;
    double scale = 1000.0;
    double tick = 0.1;
    std::string transport = "tcp";
    std::string host = "127.0.0.1";

    std::vector<ThingSpec> things;

    std::vector<CabinetSpec> cabinets;
    double sample_period = 0.1;
    std::vector<ControllerSpec> controllers;
    std::string turnout_thing = "FDT:campus-turnout";
    std::string turnout_node = "turnout-sensor";

    std::vector<std::string> segments;
    std::vector<NodeSpec> nodes;
    net::Policy policy = net::Policy::campus_default();
    std::string broker_node = "broker";
    std::string historian_node = "scada";
    std::string ems_node = "ems";
    std::string operator_node = "operator";
    std::string client_segment = "client";

    std::vector<historian::Datapoint> datapoints;

    ems::EmsConfig ems;
    ems::EmsBindings ems_bindings;

    occupancy::TurnoutModel turnout;
    double turnout_sync_period = 60.0;

    std::vector<InjectionSpec> injections;

    const ThingSpec* thing(const std::string& id) const;
    const NodeSpec* node(const std::string& id) const;
};

// Parses and cross-validates. Relative file paths resolve against
// `base_dir`. Throws Error(Validation) naming the offending entry, or
// Error(Config) for an unreadable or malformed file.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

// Re-runs the cross-reference checks on an in-memory scenario.
void validate(const Scenario& s);

}  // namespace microtwin::scenario
