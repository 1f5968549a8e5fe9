#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "microtwin/error.hpp"
#include "microtwin/net/fabric.hpp"
#include "microtwin/net/policy.hpp"
#include "microtwin/occupancy/population.hpp"
#include "microtwin/occupancy/turnout.hpp"
#include "microtwin/sim/calendar.hpp"

using namespace microtwin;
using namespace microtwin::occupancy;

namespace {

// 2016-06-06 is a Monday.
double monday_at(double hour) { return static_cast<double>(sim::parse_iso8601("2016-06-06T00:00:00Z")) + hour * 3600; }

// E[max(0, X)] for X ~ N(mu, sigma).
double truncated_mean(double mu, double sigma) {
    double z = mu / sigma;
    double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
    return mu * cdf + sigma * pdf;
}

}  // namespace

TEST(Turnout, ScheduleLookup) {
    TurnoutModel m;
    m.schedule = default_schedule(1200);
    m.schedule[0] = {{0, 0}, {3, 0}, {8, 400}, {9, 800}, {12, 1200}, {20, 0}};
    EXPECT_DOUBLE_EQ(turnout_at(m, monday_at(12)), 1200);
    EXPECT_DOUBLE_EQ(turnout_at(m, monday_at(3)), 0);
    EXPECT_DOUBLE_EQ(turnout_at(m, monday_at(8.5)), 600);
    // Saturday, default weekend fraction
    EXPECT_DOUBLE_EQ(turnout_at(m, monday_at(5 * 24 + 12)), 120);
    EXPECT_DOUBLE_EQ(turnout_at(m, monday_at(23.5)), 0);
}

TEST(Turnout, ScheduleCsv) {
    std::istringstream in("day_of_week,hour,persons\n0,8,0\n0,12,500\n6,12,7\n");
    auto s = load_schedule_csv(in);
    TurnoutModel m;
    m.schedule = s;
    EXPECT_DOUBLE_EQ(turnout_at(m, monday_at(10)), 250);
    EXPECT_DOUBLE_EQ(turnout_at(m, monday_at(2 * 24 + 10)), 0);  // Wednesday: no anchors
    std::istringstream bad("day,hour\n");
    EXPECT_THROW(load_schedule_csv(bad), Error);
    std::istringstream bad_day("day_of_week,hour,persons\n7,1,1\n");
    EXPECT_THROW(load_schedule_csv(bad_day), Error);
}

TEST(Turnout, Validation) {
    TurnoutModel m;
    EXPECT_NO_THROW(m.validate());
    m.cluster_size = 0;
    EXPECT_THROW(m.validate(), Error);
    m = {};
    m.sigma_w = -1;
    EXPECT_THROW(m.validate(), Error);
    m = {};
    m.schedule[2] = {{10, 5}, {9, 5}};
    EXPECT_THROW(m.validate(), Error);
}

TEST(Turnout, ClusterCount) {
    EXPECT_EQ(cluster_count(0, 10), 0u);
    EXPECT_EQ(cluster_count(100, 10), 10u);
    EXPECT_EQ(cluster_count(101, 10), 11u);
    EXPECT_EQ(cluster_count(100.0000000001, 10), 10u);
    EXPECT_EQ(cluster_count(5, 10), 1u);
}

TEST(Turnout, BuildingLoadDegenerate) {
    TurnoutModel m;
    m.sigma_w = 0;
    std::mt19937_64 rng(1);
    EXPECT_DOUBLE_EQ(building_load(m, 100, rng), 4.0);
    EXPECT_DOUBLE_EQ(building_load(m, 0, rng), 1.5);
}

TEST(Turnout, BuildingLoadMonteCarlo) {
    TurnoutModel m;
    std::mt19937_64 rng(42);
    double sum = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) sum += building_load(m, 100, rng);
    double analytic = 1.5 + 10 * 10 * truncated_mean(25, 5) / 1000.0;
    EXPECT_NEAR(analytic, 4.0, 1e-6);  // truncation at 0 shifts the mean by ~3e-8
    EXPECT_LT(std::abs(sum / n - analytic) / analytic, 0.01);

    std::mt19937_64 a(7), b(7);
    EXPECT_EQ(building_load(m, 300, a), building_load(m, 300, b));
}

TEST(Population, SpawnRoundRobinAndRetire) {
    TurnoutModel m;
    m.seed = 3;
    ClientPopulation pop(m, {"A", "B", "C"});
    auto d = pop.sync(100);
    EXPECT_EQ(d.spawned.size(), 10u);
    EXPECT_EQ(pop.active_count(), 10u);
    EXPECT_EQ(pop.clients()[0].cabinet, "A");
    EXPECT_EQ(pop.clients()[1].cabinet, "B");
    EXPECT_EQ(pop.clients()[3].cabinet, "A");
    EXPECT_TRUE(pop.sync(100).empty());
    d = pop.sync(45);
    ASSERT_EQ(d.retired.size(), 5u);
    EXPECT_EQ(d.retired.front(), "client-9");
    EXPECT_EQ(pop.size(), 5u);
    d = pop.sync(60);
    EXPECT_EQ(d.spawned.front(), "client-10");
}

TEST(Population, SameSeedSameClients) {
    TurnoutModel m;
    m.seed = 99;
    ClientPopulation a(m, {"A", "B"}), b(m, {"A", "B"});
    a.sync(500);
    b.sync(500);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.clients()[i].id, b.clients()[i].id);
        EXPECT_EQ(a.clients()[i].load_w, b.clients()[i].load_w);
    }
}

TEST(Population, TripDeactivatesAndDetaches) {
    net::Fabric fabric(net::Policy::campus_default());
    TurnoutModel m;
    m.sigma_w = 0;
    ClientPopulation pop(m, {"A", "B"}, &fabric);
    pop.sync(40);
    EXPECT_DOUBLE_EQ(pop.client_load_w("A"), 500);
    EXPECT_TRUE(fabric.attached("client-0"));

    auto d = pop.trip("A");
    EXPECT_EQ(d.deactivated.size(), 2u);
    EXPECT_DOUBLE_EQ(pop.client_load_w("A"), 0);
    EXPECT_DOUBLE_EQ(pop.client_load_w("B"), 500);
    EXPECT_FALSE(fabric.attached("client-0"));
    EXPECT_EQ(pop.active_count(), 2u);

    pop.sync(60);  // new slot 4 lands in A and stays dark
    EXPECT_EQ(pop.active_count(), 3u);
    EXPECT_FALSE(pop.clients()[4].active);

    d = pop.reset("A");
    EXPECT_EQ(d.reactivated.size(), 3u);
    EXPECT_EQ(pop.active_count(), 6u);
    EXPECT_TRUE(fabric.attached("client-4"));
    EXPECT_THROW(pop.trip("Z"), Error);
}

TEST(Population, ActiveCountInvariant) {
    TurnoutModel m;
    ClientPopulation pop(m, {"A", "B", "C", "D", "E", "F"});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> persons(0, 1200);
    for (int i = 0; i < 200; ++i) {
        double t = persons(rng);
        pop.sync(t);
        if (i % 17 == 0) pop.trip("C");
        if (i % 23 == 0) pop.reset("C");
        std::size_t dark = 0;
        for (const auto& c : pop.clients()) dark += pop.tripped(c.cabinet) ? 1 : 0;
        ASSERT_EQ(pop.active_count(), cluster_count(t, 10) - dark);
    }
}
