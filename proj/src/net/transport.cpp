#include "microtwin/net/transport.hpp"

#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "microtwin/error.hpp"

namespace microtwin::net {

namespace {

std::string describe(const HttpRequest& r) { return r.method + " " + r.path; }

void deliver_or_throw(Fabric& fabric, const std::string& src, const std::string& dst, std::string_view what) {
    auto d = fabric.deliver(src, dst, what);
    if (!d.delivered) {
        throw Error(ErrorKind::Policy,
                    src + " -> " + dst + " blocked by " + d.rule_id + " (" + std::string(what) + ")");
    }
}

class InProcessHttpChannel final : public HttpChannel {
public:
    InProcessHttpChannel(Fabric& fabric, std::string src, std::string dst, HttpService& service)
        : fabric_(fabric), src_(std::move(src)), dst_(std::move(dst)), service_(service) {}

    HttpResponse send(const HttpRequest& request) override {
        deliver_or_throw(fabric_, src_, dst_, describe(request));
        HttpResponse response = service_.handle(request);
        deliver_or_throw(fabric_, dst_, src_, "reply " + std::to_string(response.status));
        return response;
    }

    const std::string& source() const override { return src_; }
    const std::string& destination() const override { return dst_; }

private:
    Fabric& fabric_;
    std::string src_;
    std::string dst_;
    HttpService& service_;
};

class TcpHttpChannel final : public HttpChannel {
public:
    TcpHttpChannel(Fabric& fabric, std::string src, std::string dst, std::string host, int port)
        : fabric_(fabric), src_(std::move(src)), dst_(std::move(dst)), client_(host, port) {
        client_.set_keep_alive(true);
        client_.set_tcp_nodelay(true);  // small request/reply pairs; Nagle stalls each one
        client_.set_connection_timeout(2, 0);
        client_.set_read_timeout(10, 0);
        client_.set_write_timeout(10, 0);
    }

    HttpResponse send(const HttpRequest& request) override {
        deliver_or_throw(fabric_, src_, dst_, describe(request));
        httplib::Result res;
        {
            std::lock_guard lock(mutex_);
            if (request.method == "GET") {
                res = client_.Get(request.path);
            } else if (request.method == "PUT") {
                res = client_.Put(request.path, request.body, "application/json");
            } else if (request.method == "POST") {
                res = client_.Post(request.path, request.body, "application/json");
            } else {
                throw Error(ErrorKind::Validation, "unsupported HTTP method " + request.method);
            }
        }
        if (!res) {
            throw Error(ErrorKind::Transport,
                        dst_ + " unreachable: " + httplib::to_string(res.error()) + " (" + describe(request) + ")");
        }
        deliver_or_throw(fabric_, dst_, src_, "reply " + std::to_string(res->status));
        HttpResponse out{res->status, res->body, {}};
        for (const auto& [key, value] : res->headers) {
            if (key == "ETag") {
                out.headers[key] = value;
            }
        }
        return out;
    }

    const std::string& source() const override { return src_; }
    const std::string& destination() const override { return dst_; }

private:
    Fabric& fabric_;
    std::string src_;
    std::string dst_;
    std::mutex mutex_;
    httplib::Client client_;
};

}  // namespace

std::unique_ptr<HttpChannel> make_inprocess_http_channel(Fabric& fabric, std::string src, std::string dst,
                                                         HttpService& service) {
    return std::make_unique<InProcessHttpChannel>(fabric, std::move(src), std::move(dst), service);
}

std::unique_ptr<HttpChannel> make_tcp_http_channel(Fabric& fabric, std::string src, std::string dst,
                                                   std::string host, int port) {
    return std::make_unique<TcpHttpChannel>(fabric, std::move(src), std::move(dst), std::move(host), port);
}

struct HttpServerHost::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

HttpServerHost::HttpServerHost(HttpService& service, const std::string& host, int port, Fabric* gate,
                               std::string gate_node)
    : impl_(std::make_unique<Impl>()) {
    auto handler = [&service, gate, gate_node](const httplib::Request& req, httplib::Response& res) {
        if (gate != nullptr && req.has_header(kSourceNodeHeader)) {
            auto src = req.get_header_value(kSourceNodeHeader);
            try {
                auto d = gate->deliver(src, gate_node, req.method + " " + req.path);
                if (!d.delivered) {
                    res.status = 403;
                    res.set_content(nlohmann::json{{"error", "blocked by " + d.rule_id}}.dump(), "application/json");
                    return;
                }
            } catch (const Error& e) {
                res.status = 403;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
                return;
            }
        }
        HttpResponse out = service.handle({req.method, req.path, req.body});
        res.status = out.status;
        for (const auto& [key, value] : out.headers) {
            res.set_header(key, value);
        }
        if (!out.body.empty()) {
            res.set_content(out.body, "application/json");
        }
    };
    impl_->server.Get(".*", handler);
    impl_->server.Put(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.set_keep_alive_timeout(1);
    impl_->server.set_tcp_nodelay(true);
    // SO_REUSEADDR only: a second server on a taken port must fail to bind
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });

    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
    } else {
        impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (impl_->port <= 0) {
        throw Error(ErrorKind::Transport, "cannot bind HTTP server to " + host + ":" + std::to_string(port));
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

HttpServerHost::~HttpServerHost() { stop(); }

int HttpServerHost::port() const noexcept { return impl_->port; }

void HttpServerHost::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

}  // namespace microtwin::net
