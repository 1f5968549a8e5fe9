// microtwin: run, validate, inject into and export a campus microgrid twin.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "microtwin/broker/scalar.hpp"
#include "microtwin/error.hpp"
#include "microtwin/scenario/runner.hpp"
#include "microtwin/scenario/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int fail(const microtwin::Error& e) {
    std::cerr << "error (" << microtwin::to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == microtwin::ErrorKind::Validation || e.kind() == microtwin::ErrorKind::Config ? kExitValidation
                                                                                                     : kExitRuntime;
}

// Command values are JSON scalars; anything else is taken as a string.
microtwin::Scalar parse_value(const std::string& text) {
    try {
        return microtwin::parse_scalar(text);
    } catch (const std::exception&) {
        return text;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale digital twin of a campus microgrid"};
    app.require_subcommand(1);

    std::string scenario_path;
    microtwin::scenario::RunOptions opts;
    std::optional<double> duration, scale;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> transport;
    std::string out_dir = "run";
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
    run->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--duration", duration, "Simulated seconds (overrides the scenario)");
    run->add_option("--scale", scale, "Simulated seconds per wall second");
    run->add_option("--seed", seed, "Random seed");
    run->add_option("--out", out_dir, "Run directory")->capture_default_str();
    run->add_option("--transport", transport, "tcp or inproc")->check(CLI::IsMember({"tcp", "inproc"}));
    run->add_flag("-q,--quiet", quiet, "No progress output");

    auto* validate = app.add_subcommand("validate", "Load and cross-check a scenario");
    validate->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);

    std::string target, value, run_dir, url;
    auto* inject = app.add_subcommand("inject", "Send an operator command to a live run");
    inject->add_option("--target", target, "thing/feature/property or modbus:<cabinet>/coil/<address>")->required();
    inject->add_option("--value", value, "JSON scalar; bare words are strings")->required();
    auto* by_run = inject->add_option("--run", run_dir, "Run directory of the live run")->check(CLI::ExistingDirectory);
    inject->add_option("--url", url, "Historian address host:port")->excludes(by_run);

    std::string export_dir, export_out;
    auto* exp = app.add_subcommand("export", "Rebuild datapoints.csv and summary.csv from a run");
    exp->add_option("--run", export_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    exp->add_option("--out", export_out, "Output directory (default: the run directory)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            auto s = microtwin::scenario::load_scenario(scenario_path);
            std::cout << "ok: " << s.name << ", " << s.things.size() << " things, " << s.cabinets.size()
                      << " cabinets, " << s.datapoints.size() << " datapoints\n";
            return kExitOk;
        }
        if (*run) {
            auto s = microtwin::scenario::load_scenario(scenario_path);
            opts.out_dir = out_dir;
            opts.duration = duration;
            opts.scale = scale;
            opts.seed = seed;
            opts.transport = transport;
            if (!quiet) opts.progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
            auto result = microtwin::scenario::run(s, opts);
            if (result.aborted) {
                std::cerr << "run aborted: " << result.diagnostic << "\npartial artifacts in " << out_dir << '\n';
                return kExitRuntime;
            }
            if (!quiet) std::cout << "run complete: " << result.events << " events in " << result.wall_seconds
                      << " wall-s, artifacts in " << out_dir << '\n';
            return kExitOk;
        }
        if (*inject) {
            microtwin::scenario::Endpoint ep;
            if (!url.empty()) {
                auto colon = url.rfind(':');
                if (colon == std::string::npos) throw microtwin::Error(microtwin::ErrorKind::Validation, "--url needs host:port");
                ep = {url.substr(0, colon), std::stoi(url.substr(colon + 1))};
            } else {
                ep = microtwin::scenario::historian_endpoint(run_dir.empty() ? "run" : run_dir);
            }
            std::cout << microtwin::scenario::inject(ep, {target, parse_value(value)}) << '\n';
            return kExitOk;
        }
        if (*exp) {
            for (const auto& p : microtwin::scenario::export_csv(export_dir, export_out.empty() ? export_dir : export_out)) {
                std::cout << p.string() << '\n';
            }
            return kExitOk;
        }
    } catch (const microtwin::Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
