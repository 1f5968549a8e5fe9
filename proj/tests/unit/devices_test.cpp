#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "microtwin/broker/http_api.hpp"
#include "microtwin/devices/cabinet.hpp"
#include "microtwin/devices/controller.hpp"
#include "microtwin/devices/models.hpp"
#include "microtwin/error.hpp"
#include "microtwin/net/policy.hpp"
#include "microtwin/occupancy/population.hpp"
#include "microtwin/sim/calendar.hpp"

using namespace microtwin;
using namespace microtwin::devices;

namespace {

sim::LinearStateSpace storage_system(double x0 = 50) {
    Eigen::MatrixXd a(1, 1), b(1, 2);
    a << 0;
    b << 0.12667, -0.14;
    Eigen::VectorXd x(1);
    x << x0;
    return {a, b, x};
}

sim::LinearStateSpace turbine_system() {
    Eigen::MatrixXd a(2, 2), b(2, 3);
    a << -0.3076, 0, 0.0008, -0.2;
    b << 4750, 29993, -0.1, 1, 45, 0.2;
    return {a, b, Eigen::VectorXd::Zero(2)};
}

CabinetConfig cabinet_cfg(double base, double max) { return {"B1", base, max, 0.1}; }

}  // namespace

TEST(Cabinet, SampleSumsActiveClients) {
    SmartCabinet cab(cabinet_cfg(1500, 10000));
    EXPECT_DOUBLE_EQ(cab.sample(250 + 250), 2000);
    EXPECT_EQ(cab.registers()->input(kConsumptionRegister), 2000);
    EXPECT_DOUBLE_EQ(cab.sample(0), 1500);
    EXPECT_EQ(cab.registers()->input(kMaxConsumptionRegister), 10000);
}

TEST(Cabinet, MasterOffReportsZero) {
    SmartCabinet cab(cabinet_cfg(1500, 10000));
    cab.registers()->set_coil(kMasterCoil, false);
    EXPECT_DOUBLE_EQ(cab.sample(900), 0);
    EXPECT_EQ(cab.registers()->input(kConsumptionRegister), 0);
}

TEST(Cabinet, SampleSaturates) {
    SmartCabinet cab(cabinet_cfg(1500, 0));
    EXPECT_DOUBLE_EQ(cab.sample(99000), 100500);
    EXPECT_EQ(cab.registers()->input(kConsumptionRegister), 65535);
}

TEST(TripPlcScan, Examples) {
    modbus::RegisterFile rf;
    rf.map_input(kConsumptionRegister, 30000);
    rf.map_input(kMaxConsumptionRegister, 25000);
    rf.map_coil(kTripCoil, false);
    EXPECT_TRUE(plc_scan(rf).trip);
    EXPECT_EQ(rf.coil(kTripCoil), true);

    rf.set_coil(kTripCoil, false);
    rf.set_input(kConsumptionRegister, 20000);
    EXPECT_FALSE(plc_scan(rf).trip);

    rf.set_input(kMaxConsumptionRegister, 0);
    rf.set_input(kConsumptionRegister, 60000);
    auto v = rf.version();
    auto r = plc_scan(rf);
    EXPECT_FALSE(r.trip);
    EXPECT_FALSE(r.written);
    EXPECT_EQ(rf.version(), v);
}

TEST(TripPlcScan, LatchesUntilScadaReset) {
    SmartCabinet cab(cabinet_cfg(1500, 5000));
    cab.sample(6000);
    EXPECT_EQ(cab.scan(), TripEdge::Tripped);
    cab.sample(0);
    EXPECT_EQ(cab.scan(), TripEdge::None);
    EXPECT_TRUE(cab.tripped());
    cab.registers()->set_coil(kTripCoil, false);  // SCADA write
    EXPECT_EQ(cab.scan(), TripEdge::Reset);
    EXPECT_FALSE(cab.tripped());
}

TEST(TripPlcScan, TripShedsClientsBeforeNextSample) {
    occupancy::TurnoutModel m;
    m.sigma_w = 0;
    occupancy::ClientPopulation pop(m, {"B1"});
    SmartCabinet cab(cabinet_cfg(1500, 5000));
    pop.sync(100);  // 10 clients x 250 W
    EXPECT_DOUBLE_EQ(cab.sample(pop.client_load_w("B1")), 4000);
    EXPECT_EQ(cab.scan(), TripEdge::None);
    pop.sync(300);
    EXPECT_DOUBLE_EQ(cab.sample(pop.client_load_w("B1")), 9000);
    ASSERT_EQ(cab.scan(), TripEdge::Tripped);
    pop.trip("B1");
    EXPECT_LE(cab.sample(pop.client_load_w("B1")), 1500);
}

TEST(Storage, ChargeAndDischargeClosedForm) {
    StorageModel s(storage_system());
    s.set_mode(StorageMode::Charge);
    s.step(100);
    EXPECT_NEAR(s.level(), 50 + 0.12667 * 100, 1e-9);

    StorageModel d(storage_system());
    d.set_mode(StorageMode::Discharge);
    d.step(100);
    EXPECT_NEAR(d.level(), 36.0, 1e-9);

    StorageModel i(storage_system());
    i.step(100);
    EXPECT_DOUBLE_EQ(i.level(), 50);
}

TEST(Storage, MutualExclusion) {
    StorageModel s(storage_system());
    for (auto mode : {StorageMode::Charge, StorageMode::Discharge, StorageMode::Idle}) {
        s.set_mode(mode);
        s.step(1, 0.7);
        EXPECT_EQ(s.input()[0] * s.input()[1], 0.0);
    }
}

TEST(Storage, ClampsAndForcesIdle) {
    StorageModel s(storage_system(99.9));
    s.set_mode(StorageMode::Charge);
    s.step(10);
    EXPECT_DOUBLE_EQ(s.level(), 100);
    EXPECT_EQ(s.mode(), StorageMode::Idle);

    StorageModel d(storage_system(0.5));
    d.set_mode(StorageMode::Discharge);
    d.step(10);
    EXPECT_DOUBLE_EQ(d.level(), 0);
    EXPECT_EQ(d.mode(), StorageMode::Idle);
}

TEST(Storage, ThrottledFlowMatchesEnergy) {
    const double capacity = 100;
    StorageModel s(storage_system(), capacity);
    EXPECT_NEAR(s.rated_charge_kw(), 100 * 0.0012667 * 3600, 1e-9);
    s.set_mode(StorageMode::Charge);
    double flow_kw = 40;
    s.step(1, flow_kw / s.rated_charge_kw());
    double kwh = (s.level() - 50) / 100 * capacity;
    EXPECT_NEAR(kwh, flow_kw / 3600, 1e-12);
    EXPECT_NEAR(StorageModel(storage_system(99.99), capacity).max_charge_kw(1), 0.01 / 100 * capacity * 3600, 1e-6);
}

TEST(Storage, TimeUnitScaleSlowsTheRate) {
    StorageModel s(storage_system(), 100, 60);
    s.set_mode(StorageMode::Charge);
    s.step(60);
    EXPECT_NEAR(s.level(), 50.12667, 1e-9);
}

TEST(Storage, RejectsWrongShape) {
    Eigen::MatrixXd a(1, 1), b(1, 3);
    a << 0;
    b << 1, -1, 0;
    EXPECT_THROW(StorageModel(sim::LinearStateSpace(a, b, Eigen::VectorXd::Zero(1))), Error);
}

TEST(Turbine, StartSettlesAtRatedStopDecays) {
    TurbineModel t(turbine_system());
    EXPECT_NEAR(t.nominal_rpm(), 112943.75812744, 1e-4);
    EXPECT_DOUBLE_EQ(t.power_kw(), 0);
    t.command(TurbineCommand::Start);
    for (int i = 0; i < 30; ++i) t.step(1);
    EXPECT_GT(t.power_kw(), 0.99 * 65);
    EXPECT_LE(t.power_kw(), 65);
    t.command(TurbineCommand::Stop);
    double last = t.rpm();
    for (int i = 0; i < 60; ++i) {
        t.step(1);
        EXPECT_LE(t.rpm(), last);
        last = t.rpm();
    }
    EXPECT_LT(t.power_kw(), 0.01);
}

TEST(Solar, CallbackOverSunTable) {
    std::istringstream csv("timestamp,watt_per_msq\n2016-06-06T11:00:00Z,0\n2016-06-06T12:00:00Z,1000\n");
    sim::SunSimulator sun(sim::load_radiance_csv(csv), 2016);
    auto reg = sim::CallbackRegistry::with_builtins();
    SolarModel panel(sun, reg, sim::kSolarSurfaceCallback, {504.0, 0.16});
    double noon = static_cast<double>(sim::parse_iso8601("2016-06-06T12:00:00Z"));
    EXPECT_NEAR(panel.power_w(noon), 80640, 1e-6);
    EXPECT_DOUBLE_EQ(panel.power_w(noon - 3600), 0);
    EXPECT_THROW(SolarModel(sun, reg, "nope", {}), Error);
}

class ControllerTest : public ::testing::Test {
protected:
    ControllerTest() : fabric(net::Policy::campus_default()), api(broker) {
        fabric.attach("broker", "control");
        fabric.attach("storage-ctrl", "field");
        fabric.attach("laptop", "client");
        broker.create_thing("FDT:energy-store-1", {{"battery-pack", {{"level", 0.0}, {"mode", std::string("idle")}}}});
    }

    std::unique_ptr<broker::BrokerClient> client(const std::string& node) {
        return std::make_unique<broker::BrokerClient>(net::make_inprocess_http_channel(fabric, node, "broker", api));
    }

    net::Fabric fabric;
    broker::TwinBroker broker;
    broker::BrokerHttpApi api;
    StorageModel store{storage_system()};
};

TEST_F(ControllerTest, PublishesAscendingRevisions) {
    FieldController ctrl("storage-ctrl", "FDT:energy-store-1", client("storage-ctrl"));
    bind_storage(ctrl, store);
    auto r1 = ctrl.publish();
    auto r2 = ctrl.publish();
    ASSERT_TRUE(r1 && r2);
    EXPECT_LT(*r1, *r2);
    EXPECT_EQ(broker.get_property("FDT:energy-store-1", "battery-pack", "level"), Scalar{50.0});
    EXPECT_EQ(ctrl.publishes(), 2u);
}

TEST_F(ControllerTest, BlockedPublishCountsError) {
    FieldController ctrl("laptop", "FDT:energy-store-1", client("laptop"));
    bind_storage(ctrl, store);
    fabric.attach("broker", "field");  // client -> field is denied
    auto rev = broker.get_thing("FDT:energy-store-1").revision;
    EXPECT_FALSE(ctrl.publish());
    EXPECT_EQ(broker.get_thing("FDT:energy-store-1").revision, rev);
    EXPECT_EQ(ctrl.publish_errors(), 2u);
}

TEST_F(ControllerTest, CommandsApplyThroughFabric) {
    FieldController ctrl("storage-ctrl", "FDT:energy-store-1", client("storage-ctrl"));
    bind_storage(ctrl, store);
    ctrl.listen(broker, fabric, "broker");
    broker.put_property("FDT:energy-store-1", "battery-pack", "mode", std::string("charge"));
    EXPECT_EQ(store.mode(), StorageMode::Idle);  // not before processing
    EXPECT_EQ(ctrl.process_commands(), 1u);
    EXPECT_EQ(store.mode(), StorageMode::Charge);

    broker.put_property("FDT:energy-store-1", "battery-pack", "mode", std::string("overdrive"));
    EXPECT_EQ(ctrl.process_commands(), 0u);
    EXPECT_EQ(store.mode(), StorageMode::Charge);
    EXPECT_EQ(ctrl.rejected_commands(), 1u);

    // telemetry writes are not commands
    ctrl.publish();
    EXPECT_EQ(ctrl.process_commands(), 0u);
}

TEST_F(ControllerTest, TurbineCommands) {
    TurbineModel t(turbine_system());
    broker.create_thing("FDT:turbine-1", {{"turbine", {{"command", std::string("stop")}}}});
    FieldController ctrl("storage-ctrl", "FDT:turbine-1", client("storage-ctrl"));
    bind_turbine(ctrl, t);
    broker::ChangeEvent ev{"FDT:turbine-1", "turbine", "command", std::nullopt, std::string("start"), 1, 0};
    EXPECT_TRUE(ctrl.apply_command(ev));
    EXPECT_TRUE(t.running());
    ev.new_value = 3.0;
    EXPECT_FALSE(ctrl.apply_command(ev));
    EXPECT_TRUE(t.running());
}
