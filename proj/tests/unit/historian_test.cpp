#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "microtwin/broker/http_api.hpp"
#include "microtwin/error.hpp"
#include "microtwin/historian/historian.hpp"
#include "microtwin/net/policy.hpp"

using namespace microtwin;
using namespace microtwin::historian;

namespace {

class HistorianTest : public ::testing::Test {
protected:
    HistorianTest() : fabric(net::Policy::campus_default()), broker_api(broker), api(hist) {
        fabric.attach("scada", "control");
        fabric.attach("broker", "control");
        fabric.attach("cabinet-A", "field");
        fabric.attach("cabinet-B", "field");
        fabric.attach("ems", "control");
        fabric.attach("laptop", "client");
        broker.create_thing("FDT:solar-panel-1", {{"panel", {{"power", 42000.0}, {"label", std::string("roof")}}}});
        broker.create_thing("FDT:energy-store-1", {{"battery-pack", {{"mode", std::string("idle")}}}});
        for (auto [name, watts] : {std::pair{"A", 2000}, std::pair{"B", 3000}}) {
            auto rf = std::make_shared<modbus::RegisterFile>();
            rf->map_input(100, static_cast<std::uint16_t>(watts));
            rf->map_coil(100, false);
            rf->map_coil(101, true);
            files[name] = rf;
            hist.add_modbus_device(name, std::make_unique<modbus::ModbusClient>(modbus::make_inprocess_modbus_channel(
                                             fabric, "scada", std::string("cabinet-") + name, rf)));
        }
        hist.set_broker(std::make_unique<broker::BrokerClient>(
            net::make_inprocess_http_channel(fabric, "scada", "broker", broker_api)));
    }

    void register_standard() {
        hist.register_point({"DP_solar_power", "Solar power", BrokerSource{"FDT:solar-panel-1", "panel", "power"}});
        hist.register_point({"DP_buildingA_consumption", "Building A", ModbusSource{"A", modbus::Table::InputRegisters, 100}});
        hist.register_point({"DP_buildingB_consumption", "Building B", ModbusSource{"B", modbus::Table::InputRegisters, 100}});
        hist.register_point({"DP_campus_consumption", "Campus",
                             DerivedSum{{"DP_buildingA_consumption", "DP_buildingB_consumption"}}});
    }

    net::Fabric fabric;
    broker::TwinBroker broker;
    broker::BrokerHttpApi broker_api;
    Historian hist;
    HistorianHttpApi api;
    std::map<std::string, std::shared_ptr<modbus::RegisterFile>> files;
};

}  // namespace

TEST_F(HistorianTest, PollsBrokerModbusAndDerived) {
    register_standard();
    EXPECT_EQ(hist.poll_due(0), 4u);
    EXPECT_EQ(hist.get_latest("DP_solar_power").value, 42000);
    EXPECT_EQ(hist.get_latest("DP_buildingA_consumption").value, 2000);
    EXPECT_EQ(hist.get_latest("DP_campus_consumption").value, 5000);
    EXPECT_DOUBLE_EQ(hist.next_due(), 10);
    EXPECT_EQ(hist.poll_due(5), 0u);
    files["A"]->set_input(100, 2500);
    EXPECT_EQ(hist.poll_due(10), 4u);
    auto s = hist.get_latest("DP_campus_consumption");
    EXPECT_EQ(s.timestamp, 10);
    EXPECT_EQ(s.value, 5500);
}

TEST_F(HistorianTest, SamplesAreExactlyOnePeriodApart) {
    register_standard();
    for (int t = 0; t <= 600; t += 10) hist.poll_due(t);
    auto series = hist.series("DP_solar_power");
    ASSERT_EQ(series.size(), 61u);
    for (std::size_t i = 1; i < series.size(); ++i) EXPECT_EQ(series[i].timestamp - series[i - 1].timestamp, 10);
}

TEST_F(HistorianTest, SourceDownLeavesGap) {
    register_standard();
    hist.poll_due(0);
    std::vector<PollError> errors;
    hist.on_error([&](const PollError& e) { errors.push_back(e); });
    fabric.attach("scada", "client");  // client -> field denied
    hist.poll_due(10);
    EXPECT_EQ(hist.series("DP_buildingA_consumption").size(), 1u);
    EXPECT_EQ(hist.poll_errors("DP_buildingA_consumption"), 1u);
    EXPECT_EQ(hist.poll_errors("DP_campus_consumption"), 1u);
    EXPECT_EQ(hist.get_latest("DP_campus_consumption").timestamp, 0);
    EXPECT_EQ(errors.size(), 4u);  // the broker sits in control, also unreachable from client
    EXPECT_EQ(hist.series("DP_solar_power").size(), 1u);
}

TEST_F(HistorianTest, NonNumericIsGap) {
    hist.register_point({"DP_solar_label", "", BrokerSource{"FDT:solar-panel-1", "panel", "label"}});
    EXPECT_EQ(hist.poll_due(0), 0u);
    EXPECT_EQ(hist.poll_errors(), 1u);
    EXPECT_THROW(hist.get_latest("DP_solar_label"), Error);
}

TEST_F(HistorianTest, Registration) {
    EXPECT_TRUE(hist.get_all().empty());
    register_standard();
    auto all = hist.get_all();
    ASSERT_EQ(all.size(), 4u);
    EXPECT_EQ(all[0].xid, "DP_solar_power");
    EXPECT_EQ(all[0].name, "Solar power");
    EXPECT_THROW(hist.register_point({"DP_solar_power", "", BrokerSource{}}), Error);
    EXPECT_THROW(hist.register_point({"DP_x", "", DerivedSum{{"DP_missing"}}}), Error);
    EXPECT_THROW(hist.register_point({"DP_y", "", BrokerSource{}, 0.0}), Error);
}

TEST_F(HistorianTest, LatestErrors) {
    register_standard();
    try {
        hist.get_latest("DP_nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
    try {
        hist.get_latest("DP_solar_power");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoData);
    }
}

TEST_F(HistorianTest, Commands) {
    auto rev = broker.get_thing("FDT:energy-store-1").revision;
    hist.issue_command({"FDT:energy-store-1/battery-pack/mode", std::string("discharge")});
    EXPECT_EQ(broker.get_thing("FDT:energy-store-1").revision, rev + 1);
    EXPECT_EQ(broker.get_property("FDT:energy-store-1", "battery-pack", "mode"), Scalar{std::string("discharge")});

    hist.issue_command({"modbus:B/coil/101", false});
    EXPECT_EQ(files["B"]->coil(101), false);
    hist.issue_command({"modbus:B/coil/101", std::string("on")});
    EXPECT_EQ(files["B"]->coil(101), true);

    auto kind_of = [&](const CommandRequest& c) {
        try {
            hist.issue_command(c);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Config;
    };
    EXPECT_EQ(kind_of({"FDT:ghost-1/x/y", 1.0}), ErrorKind::NotFound);
    EXPECT_EQ(kind_of({"modbus:Z/coil/100", true}), ErrorKind::NotFound);
    EXPECT_EQ(kind_of({"modbus:A/coil/555", true}), ErrorKind::NotFound);
    EXPECT_EQ(kind_of({"modbus:A/coil/100", 7.0}), ErrorKind::Validation);
    EXPECT_EQ(kind_of({"garbage", 1.0}), ErrorKind::Validation);
    fabric.attach("scada", "dmz");
    EXPECT_EQ(kind_of({"modbus:A/coil/100", true}), ErrorKind::Policy);
}

TEST_F(HistorianTest, HttpApiRoundTrip) {
    register_standard();
    hist.poll_due(0);
    HistorianClient ems(net::make_inprocess_http_channel(fabric, "ems", "scada", api));
    auto all = ems.get_all();
    ASSERT_EQ(all.size(), 4u);
    EXPECT_EQ(all[3].xid, "DP_campus_consumption");
    EXPECT_EQ(ems.get_latest("DP_campus_consumption").value, 5000);
    EXPECT_NE(ems.command({"FDT:energy-store-1/battery-pack/mode", std::string("charge")}).find("rev"),
              std::string::npos);
    EXPECT_EQ(broker.get_property("FDT:energy-store-1", "battery-pack", "mode"), Scalar{std::string("charge")});
    try {
        ems.get_latest("DP_nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
    try {
        ems.command({"FDT:ghost-1/a/b", 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
    EXPECT_EQ(api.handle({"POST", "/command", "{\"value\": 1}"}).status, 400);
    EXPECT_EQ(api.handle({"DELETE", "/datapoint/getAll", ""}).status, 405);
    EXPECT_EQ(api.handle({"GET", "/nope", ""}).status, 404);

    HistorianClient intruder(net::make_inprocess_http_channel(fabric, "laptop", "scada", api));
    EXPECT_THROW(intruder.get_all(), Error);
}

TEST_F(HistorianTest, StreamsCsv) {
    auto dir = std::filesystem::temp_directory_path() / "microtwin_hist_csv";
    std::filesystem::remove_all(dir);
    register_standard();
    hist.stream_to(dir);
    hist.poll_due(0);
    hist.poll_due(10);
    hist.flush();
    std::ifstream in(dir / "DP_campus_consumption.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "timestamp,value\n0,5000\n10,5000\n");
    std::filesystem::remove_all(dir);
}
