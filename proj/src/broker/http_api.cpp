#include "microtwin/broker/http_api.hpp"

#include <regex>

#include "microtwin/error.hpp"

namespace microtwin::broker {

namespace {

net::HttpResponse error_response(int status, const std::string& message) {
    return {status, nlohmann::json{{"error", message}}.dump(), {}};
}

int status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Validation: return 400;
    case ErrorKind::Conflict: return 409;
    default: return 500;
    }
}

void raise_for(const net::HttpResponse& r, const std::string& what) {
    std::string detail = what + ": HTTP " + std::to_string(r.status);
    auto j = nlohmann::json::parse(r.body, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("error")) {
        detail += " " + j["error"].get<std::string>();
    }
    switch (r.status) {
    case 404: throw Error(ErrorKind::NotFound, detail);
    case 400: throw Error(ErrorKind::Validation, detail);
    case 403: throw Error(ErrorKind::Policy, detail);
    default: throw Error(ErrorKind::Transport, detail);
    }
}

}  // namespace

std::string property_path(const std::string& thing_id, const std::string& feature, const std::string& property) {
    return "/api/2/things/" + thing_id + "/features/" + feature + "/properties/" + property;
}

net::HttpResponse BrokerHttpApi::handle(const net::HttpRequest& request) {
    static const std::regex property_route(R"(^/api/2/things/([^/]+)/features/([^/]+)/properties/([^/]+)$)");
    try {
        if (request.path == "/api/2/things" || request.path == "/api/2/things/") {
            if (request.method != "GET") return error_response(405, "method not allowed");
            return {200, nlohmann::json(broker_.thing_ids()).dump(), {}};
        }
        std::smatch m;
        if (!std::regex_match(request.path, m, property_route)) {
            return error_response(404, "no route for " + request.path);
        }
        if (request.method == "GET") {
            return {200, scalar_to_json(broker_.get_property(m[1], m[2], m[3])).dump(), {}};
        }
        if (request.method == "PUT") {
            auto rev = broker_.put_property(m[1], m[2], m[3], parse_scalar(request.body));
            return {204, "", {{"ETag", "\"rev:" + std::to_string(rev) + "\""}}};
        }
        return error_response(405, "method not allowed");
    } catch (const Error& e) {
        return error_response(status_for(e.kind()), e.what());
    }
}

Scalar BrokerClient::get(const std::string& thing_id, const std::string& feature, const std::string& property) {
    auto r = channel_->send({"GET", property_path(thing_id, feature, property), ""});
    if (r.status != 200) raise_for(r, "GET " + thing_id + "/" + feature + "/" + property);
    return parse_scalar(r.body);
}

std::uint64_t BrokerClient::put(const std::string& thing_id, const std::string& feature,
                                const std::string& property, const Scalar& value) {
    auto r = channel_->send({"PUT", property_path(thing_id, feature, property), scalar_to_string(value)});
    if (r.status != 204 && r.status != 200) raise_for(r, "PUT " + thing_id + "/" + feature + "/" + property);
    auto it = r.headers.find("ETag");
    if (it == r.headers.end()) return 0;
    auto digits = it->second.find_first_of("0123456789");
    return digits == std::string::npos ? 0 : std::stoull(it->second.substr(digits));
}

std::vector<std::string> BrokerClient::things() {
    auto r = channel_->send({"GET", "/api/2/things", ""});
    if (r.status != 200) raise_for(r, "GET things");
    return nlohmann::json::parse(r.body).get<std::vector<std::string>>();
}

}  // namespace microtwin::broker
