#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include "microtwin/broker/http_api.hpp"
#include "microtwin/broker/twin_broker.hpp"
#include "microtwin/error.hpp"

using namespace microtwin;
using namespace microtwin::broker;

namespace {

FeatureMap panel_features() { return {{"panel", {{"power", 0.0}}}}; }

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::Config;
}

}  // namespace

TEST(Broker, CreateThing) {
    TwinBroker b;
    auto t = b.create_thing("FDT:solar-panel-1", panel_features());
    EXPECT_EQ(t.revision, 0u);
    EXPECT_EQ(std::get<double>(t.features.at("panel").at("power")), 0.0);
    EXPECT_EQ(kind_of([&] { b.create_thing("FDT:solar-panel-1", {}); }), ErrorKind::Conflict);
    EXPECT_EQ(kind_of([&] { b.create_thing("nonamespace", {}); }), ErrorKind::Validation);
    EXPECT_EQ(kind_of([&] { b.create_thing("FDT:bad id", {}); }), ErrorKind::Validation);
}

TEST(Broker, PutGetAndRevisions) {
    TwinBroker b;
    b.create_thing("FDT:solar-panel-1", panel_features());
    auto sub = b.subscribe("FDT:solar-panel-1/panel");
    EXPECT_EQ(b.put_property("FDT:solar-panel-1", "panel", "power", 42000.0), 1u);
    EXPECT_EQ(std::get<double>(b.get_property("FDT:solar-panel-1", "panel", "power")), 42000.0);
    EXPECT_EQ(b.get_thing("FDT:solar-panel-1").revision, 1u);  // GET has no side effect
    EXPECT_EQ(b.put_property("FDT:solar-panel-1", "panel", "power", 41000.0), 2u);
    auto events = sub->drain();
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[0].revision, 1u);
    EXPECT_EQ(std::get<double>(*events[1].old_value), 42000.0);

    EXPECT_EQ(kind_of([&] { b.put_property("FDT:nope", "panel", "power", 1.0); }), ErrorKind::NotFound);
    EXPECT_EQ(kind_of([&] { b.get_property("FDT:solar-panel-1", "panel", "voltage"); }), ErrorKind::NotFound);
}

TEST(Broker, SubscriptionFiltering) {
    TwinBroker b;
    b.create_thing("FDT:energy-store-1", {{"battery-pack", {{"mode", std::string("idle")}}}});
    b.create_thing("FDT:turbine-1", {{"turbine", {{"command", std::string("stop")}}}});
    auto sub = b.subscribe("FDT:energy-store-1/battery-pack");
    auto all = b.subscribe("*");
    b.put_property("FDT:energy-store-1", "battery-pack", "mode", std::string("charge"));
    b.put_property("FDT:turbine-1", "turbine", "command", std::string("start"));
    auto got = sub->drain();
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(std::get<std::string>(got[0].new_value), "charge");
    EXPECT_EQ(all->drain().size(), 2u);

    for (int i = 0; i < 3; ++i) b.put_property("FDT:energy-store-1", "battery-pack", "level", double(i));
    got = sub->drain();
    ASSERT_EQ(got.size(), 3u);
    EXPECT_LT(got[0].revision, got[1].revision);
    EXPECT_LT(got[1].revision, got[2].revision);
}

TEST(Broker, SlowSubscriberIsDisconnectedAsLagged) {
    TwinBroker b(nullptr, 4);
    b.create_thing("FDT:x", {{"f", {}}});
    auto sub = b.subscribe("FDT:x");
    for (int i = 0; i < 5; ++i) b.put_property("FDT:x", "f", "p", double(i));
    EXPECT_TRUE(sub->lagged());
    EXPECT_EQ(kind_of([&] { sub->drain(); }), ErrorKind::Lagged);
}

TEST(Broker, ConcurrentWritersKeepRegisterAndRevisionSemantics) {
    constexpr int kWriters = 16;
    constexpr int kWrites = 1000;
    TwinBroker b(nullptr, kWriters * kWrites + 1);
    b.create_thing("FDT:shared", {{"f", {}}});
    auto sub = b.subscribe("FDT:shared");
    std::vector<std::vector<std::uint64_t>> revs(kWriters);
    std::atomic<int> violations{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < kWriters; ++w) {
        threads.emplace_back([&, w] {
            std::string prop = "p" + std::to_string(w);
            for (int i = 0; i < kWrites; ++i) {
                revs[w].push_back(b.put_property("FDT:shared", "f", prop, double(i)));
                if (std::get<double>(b.get_property("FDT:shared", "f", prop)) != double(i)) ++violations;
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(violations.load(), 0);
    std::set<std::uint64_t> all;
    for (const auto& r : revs) {
        EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
        all.insert(r.begin(), r.end());
    }
    ASSERT_EQ(all.size(), std::size_t(kWriters * kWrites));
    EXPECT_EQ(*all.begin(), 1u);
    EXPECT_EQ(*all.rbegin(), std::uint64_t(kWriters * kWrites));
    auto events = sub->drain();
    ASSERT_EQ(events.size(), std::size_t(kWriters * kWrites));
    for (std::size_t i = 0; i < events.size(); ++i) ASSERT_EQ(events[i].revision, i + 1);
}

TEST(Broker, JournalReplayRebuildsState) {
    auto path = std::filesystem::temp_directory_path() / "microtwin_broker_journal.jsonl";
    std::filesystem::remove(path);
    {
        TwinBroker b;
        b.open_journal(path);
        b.create_thing("FDT:energy-store-1", {{"battery-pack", {{"mode", std::string("idle")}}}});
        b.put_property("FDT:energy-store-1", "battery-pack", "level", 50.0);
        b.put_property("FDT:energy-store-1", "battery-pack", "mode", std::string("charge"));
    }
    TwinBroker replayed;
    TwinBroker::replay(path, replayed);
    auto t = replayed.get_thing("FDT:energy-store-1");
    EXPECT_EQ(t.revision, 2u);
    EXPECT_EQ(std::get<std::string>(t.features.at("battery-pack").at("mode")), "charge");
    std::filesystem::remove(path);
}

TEST(BrokerHttp, RoutesAndStatusCodes) {
    TwinBroker b;
    b.create_thing("FDT:solar-panel-1", panel_features());
    BrokerHttpApi api(b);
    const std::string path = "/api/2/things/FDT:solar-panel-1/features/panel/properties/power";
    auto put = api.handle({"PUT", path, "42000"});
    EXPECT_EQ(put.status, 204);
    EXPECT_EQ(put.headers.at("ETag"), "\"rev:1\"");
    auto get = api.handle({"GET", path, ""});
    EXPECT_EQ(get.status, 200);
    EXPECT_EQ(get.body, "42000.0");
    EXPECT_EQ(api.handle({"PUT", path, R"({"nested":1})"}).status, 400);
    EXPECT_EQ(api.handle({"PUT", path, "not json"}).status, 400);
    EXPECT_EQ(api.handle({"GET", "/api/2/things/FDT:solar-panel-1/features/panel/properties/volts", ""}).status,
              404);
    EXPECT_EQ(api.handle({"PUT", "/api/2/things/FDT:x/features/panel/properties/power", "1"}).status, 404);
    auto list = api.handle({"GET", "/api/2/things", ""});
    EXPECT_EQ(list.body, R"(["FDT:solar-panel-1"])");
}

TEST(BrokerHttp, ClientOverTcp) {
    TwinBroker b;
    b.create_thing("FDT:solar-panel-1", panel_features());
    BrokerHttpApi api(b);
    net::Fabric fabric(net::Policy::campus_default());
    fabric.attach("broker", "control");
    fabric.attach("solar-ctrl", "field");
    fabric.attach("laptop", "client");
    net::HttpServerHost host(api, "127.0.0.1", 0);
    BrokerClient ctrl(net::make_tcp_http_channel(fabric, "solar-ctrl", "broker", "127.0.0.1", host.port()));
    EXPECT_EQ(ctrl.put("FDT:solar-panel-1", "panel", "power", 42000.0), 1u);
    EXPECT_EQ(ctrl.put("FDT:solar-panel-1", "panel", "power", 43000.0), 2u);
    EXPECT_EQ(std::get<double>(ctrl.get("FDT:solar-panel-1", "panel", "power")), 43000.0);
    EXPECT_EQ(ctrl.things(), std::vector<std::string>{"FDT:solar-panel-1"});
    EXPECT_EQ(kind_of([&] { ctrl.get("FDT:solar-panel-1", "panel", "nope"); }), ErrorKind::NotFound);
    BrokerClient outsider(net::make_tcp_http_channel(fabric, "laptop", "broker", "127.0.0.1", host.port()));
    EXPECT_EQ(kind_of([&] { outsider.get("FDT:solar-panel-1", "panel", "power"); }), ErrorKind::Policy);
}
