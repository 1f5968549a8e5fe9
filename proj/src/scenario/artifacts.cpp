#include "microtwin/scenario/runner.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
// after every Eigen include: <resolv.h> defines _res
#include <httplib.h>
#include <json.hpp>

#include "microtwin/error.hpp"
#include "microtwin/net/transport.hpp"

namespace microtwin::scenario {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "missing run artifact " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
    return out;
}

struct Row {
    double timestamp;
    std::size_t order;  // registration index of the datapoint
    std::string text;   // "timestamp,xid,value"
};

}  // namespace

std::vector<fs::path> export_csv(const fs::path& run_dir, const fs::path& out_dir) {
    const json manifest = read_json(run_dir / "raw" / "manifest.json");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::Config, "cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<Row> rows;
    std::size_t order = 0;
    for (const auto& dp : manifest.at("datapoints")) {
        const auto xid = dp.at("xid").get<std::string>();
        std::ifstream in(run_dir / "raw" / "series" / (xid + ".csv"));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            rows.push_back({std::stod(line.substr(0, comma)), order,
                            line.substr(0, comma) + "," + xid + line.substr(comma)});
        }
        ++order;
    }
    // stable: a point's own samples keep their stored order
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.order < b.order;
    });

    const fs::path datapoints = out_dir / "datapoints.csv";
    {
        auto out = open_out(datapoints);
        out << "timestamp,xid,value\n";
        for (const auto& r : rows) out << r.text << '\n';
    }

    const fs::path summary = out_dir / "summary.csv";
    {
        auto out = open_out(summary);
        out << "day,date,solar_kwh,consumption_kwh,storage_in_kwh,storage_out_kwh,turbine_kwh,grid_kwh,"
               "dissipated_kwh\n";
        std::ifstream in(run_dir / "raw" / "energy.csv");
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
            if (cells.size() < 9) continue;
            out << cells[0] << ',' << cells[1];
            for (std::size_t i = 2; i < 9; ++i) out << fmt::format(",{:.6f}", std::stod(cells[i]));
            out << '\n';
        }
    }
    return {datapoints, summary};
}

Endpoint historian_endpoint(const fs::path& run_dir) {
    const json j = read_json(run_dir / "endpoints.json");
    return {j.at("historian").at("host").get<std::string>(), j.at("historian").at("port").get<int>()};
}

std::string inject(const Endpoint& historian, const historian::CommandRequest& command,
                   const std::string& operator_node) {
    httplib::Client client(historian.host, historian.port);
    client.set_connection_timeout(5);
    const json body = {{"target", command.target}, {"value", scalar_to_json(command.value)}};
    auto res = client.Post("/command", {{net::kSourceNodeHeader, operator_node}}, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorKind::Transport, fmt::format("historian at {}:{} is unreachable ({})", historian.host,
                                                      historian.port, httplib::to_string(res.error())));
    }
    json reply = json::parse(res->body, nullptr, false);
    if (res->status == 200 && reply.is_object() && reply.contains("ack")) return reply.at("ack").get<std::string>();

    ErrorKind kind = res->status == 403 ? ErrorKind::Policy : ErrorKind::Transport;
    std::string message = "HTTP " + std::to_string(res->status);
    if (reply.is_object()) {
        if (reply.contains("kind") && reply["kind"].is_string()) {
            kind = parse_error_kind(reply["kind"].get<std::string>()).value_or(kind);
        }
        if (reply.contains("error") && reply["error"].is_string()) message = reply["error"].get<std::string>();
    }
    throw Error(kind, message);
}

}  // namespace microtwin::scenario
