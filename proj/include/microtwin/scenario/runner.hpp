#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "microtwin/historian/historian.hpp"
#include "microtwin/scenario/scenario.hpp"

namespace microtwin::scenario {

struct RunOptions {
    std::filesystem::path out_dir = "run";
    std::optional<double> duration;
    std::optional<double> scale;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> transport;
    // Called once per simulated day and at the end; may be empty.
    std::function<void(const std::string&)> progress;
};

struct RunResult {
    std::filesystem::path out_dir;
    bool aborted = false;
    std::string diagnostic;
    std::uint64_t events = 0;
    double wall_seconds = 0.0;
};

// Starts every service of the scenario, drives simulated time to the
// duration and writes the run directory:
//   endpoints.json                 live service addresses (for inject)
//   raw/manifest.json              scenario facts and datapoint order
//   raw/series/<xid>.csv           historian samples as they are stored
//   raw/ems_ticks.csv              one row per EMS tick with the physical
//                                  flows averaged over the preceding interval
//   raw/energy.csv                 per-day energy totals, full precision
//   raw/events.log, counters.json
// then exports datapoints.csv and summary.csv next to them.
// Startup failures (port conflicts) throw; a failure after startup aborts
// the run, keeps the partial artifacts and reports it in the result.
RunResult run(const Scenario& scenario, const RunOptions& options);

// Builds datapoints.csv (`timestamp,xid,value`, by timestamp then
// registration order) and summary.csv (per-day kWh) in `out_dir` from the
// raw artifacts of `run_dir`. Re-exporting yields identical bytes.
std::vector<std::filesystem::path> export_csv(const std::filesystem::path& run_dir,
                                              const std::filesystem::path& out_dir);

struct Endpoint {
    std::string host;
    int port = 0;
};

// Historian command endpoint of a live run, from its endpoints.json.
Endpoint historian_endpoint(const std::filesystem::path& run_dir);

// Posts a command to a live historian as the operator node. The historian
// gates the request through the run's network policy. Throws on denial,
// unknown target or an unreachable run.
std::string inject(const Endpoint& historian, const historian::CommandRequest& command,
                   const std::string& operator_node = "operator");

}  // namespace microtwin::scenario
