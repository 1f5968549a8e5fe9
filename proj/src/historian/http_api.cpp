#include <regex>

#include "microtwin/error.hpp"
#include "microtwin/historian/historian.hpp"

namespace microtwin::historian {

namespace {

net::HttpResponse error_response(int status, ErrorKind kind, const std::string& message) {
    return {status, nlohmann::json{{"error", message}, {"kind", std::string(to_string(kind))}}.dump(), {}};
}

int status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::NoData: return 404;
    case ErrorKind::Validation: return 400;
    case ErrorKind::Policy:
    case ErrorKind::Transport: return 502;
    default: return 500;
    }
}

[[noreturn]] void raise_for(const net::HttpResponse& r, const std::string& what) {
    ErrorKind kind = ErrorKind::Transport;
    std::string detail = what + ": HTTP " + std::to_string(r.status);
    auto j = nlohmann::json::parse(r.body, nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
        if (j.contains("kind") && j["kind"].is_string()) {
            kind = parse_error_kind(j["kind"].get<std::string>()).value_or(ErrorKind::Transport);
        } else if (r.status == 403) {
            kind = ErrorKind::Policy;
        }
        if (j.contains("error") && j["error"].is_string()) detail += " " + j["error"].get<std::string>();
    }
    throw Error(kind, detail);
}

}  // namespace

net::HttpResponse HistorianHttpApi::handle(const net::HttpRequest& request) {
    static const std::regex latest_route(R"(^/datapoint/([^/]+)/latest$)");
    try {
        std::smatch m;
        if (request.path == "/datapoint/getAll") {
            if (request.method != "GET") return error_response(405, ErrorKind::Validation, "method not allowed");
            nlohmann::json out = nlohmann::json::array();
            for (const auto& dp : historian_.get_all()) out.push_back({{"name", dp.name}, {"xid", dp.xid}});
            return {200, out.dump(), {}};
        }
        if (std::regex_match(request.path, m, latest_route)) {
            if (request.method != "GET") return error_response(405, ErrorKind::Validation, "method not allowed");
            auto s = historian_.get_latest(m[1]);
            return {200, nlohmann::json{{"timestamp", s.timestamp}, {"value", s.value}}.dump(), {}};
        }
        if (request.path == "/command") {
            if (request.method != "POST") return error_response(405, ErrorKind::Validation, "method not allowed");
            auto j = nlohmann::json::parse(request.body, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("target") || !j["target"].is_string() ||
                !j.contains("value")) {
                return error_response(400, ErrorKind::Validation, "body must be {\"target\": string, \"value\": scalar}");
            }
            auto ack = historian_.issue_command({j["target"].get<std::string>(), scalar_from_json(j["value"])});
            return {200, nlohmann::json{{"ack", ack}}.dump(), {}};
        }
        return error_response(404, ErrorKind::NotFound, "no route for " + request.path);
    } catch (const Error& e) {
        return error_response(status_for(e.kind()), e.kind(), e.what());
    }
}

std::vector<DatapointInfo> HistorianClient::get_all() {
    auto r = channel_->send({"GET", "/datapoint/getAll", ""});
    if (r.status != 200) raise_for(r, "GET /datapoint/getAll");
    std::vector<DatapointInfo> out;
    for (const auto& e : nlohmann::json::parse(r.body)) {
        out.push_back({e.at("name").get<std::string>(), e.at("xid").get<std::string>()});
    }
    return out;
}

Sample HistorianClient::get_latest(const std::string& xid) {
    auto r = channel_->send({"GET", "/datapoint/" + xid + "/latest", ""});
    if (r.status != 200) raise_for(r, "GET latest " + xid);
    auto j = nlohmann::json::parse(r.body);
    return {j.at("timestamp").get<double>(), j.at("value").get<double>()};
}

std::string HistorianClient::command(const CommandRequest& cmd) {
    nlohmann::json body{{"target", cmd.target}, {"value", scalar_to_json(cmd.value)}};
    auto r = channel_->send({"POST", "/command", body.dump()});
    if (r.status != 200) raise_for(r, "POST /command " + cmd.target);
    return nlohmann::json::parse(r.body).at("ack").get<std::string>();
}

}  // namespace microtwin::historian
