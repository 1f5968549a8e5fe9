#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "microtwin/error.hpp"
#include "microtwin/sim/calendar.hpp"
#include "microtwin/sim/callbacks.hpp"
#include "microtwin/sim/clock.hpp"
#include "microtwin/sim/interpolation.hpp"
#include "microtwin/sim/radiance.hpp"
#include "microtwin/sim/state_space.hpp"

using namespace microtwin;
using namespace microtwin::sim;

namespace {

LinearStateSpace storage_system(double level) {
    Eigen::MatrixXd a(1, 1);
    a << 0.0;
    Eigen::MatrixXd b(1, 2);
    b << 0.12667, -0.14;
    return LinearStateSpace(a, b, Eigen::VectorXd::Constant(1, level));
}

LinearStateSpace turbine_system(double dt = 1.0) {
    Eigen::MatrixXd a(2, 2);
    a << -0.3076, 0.0, 0.0008, -0.2;
    Eigen::MatrixXd b(2, 3);
    b << 4750, 29993, -0.1, 1, 45, 0.2;
    return LinearStateSpace(a, b, Eigen::VectorXd::Zero(2), dt);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) out(i++) = d;
    return out;
}

// Independent 2x2 solve by Cramer's rule: A x = rhs.
std::array<double, 2> cramer2(const std::array<double, 4>& a, const std::array<double, 2>& rhs) {
    double det = a[0] * a[3] - a[1] * a[2];
    return {(rhs[0] * a[3] - a[1] * rhs[1]) / det, (a[0] * rhs[1] - rhs[0] * a[2]) / det};
}

// Forward Euler over plain arrays; shares nothing with the RK4 path.
std::array<double, 2> euler_turbine(std::array<double, 2> x, std::array<double, 3> u, double horizon,
                                    double h) {
    const double a[2][2] = {{-0.3076, 0.0}, {0.0008, -0.2}};
    const double b[2][3] = {{4750, 29993, -0.1}, {1, 45, 0.2}};
    auto steps = static_cast<long>(std::llround(horizon / h));
    for (long s = 0; s < steps; ++s) {
        std::array<double, 2> dx{};
        for (int i = 0; i < 2; ++i) {
            dx[i] = a[i][0] * x[0] + a[i][1] * x[1] + b[i][0] * u[0] + b[i][1] * u[1] + b[i][2] * u[2];
        }
        x[0] += h * dx[0];
        x[1] += h * dx[1];
    }
    return x;
}

}  // namespace

TEST(Interpolation, LinearExamples) {
    InterpolationTable t({{0, 0}, {10, 100}}, InterpolationMode::Linear);
    EXPECT_DOUBLE_EQ(interpolate(t, 5), 50.0);
    EXPECT_DOUBLE_EQ(interpolate(t, 10), 100.0);
    EXPECT_DOUBLE_EQ(interpolate(t, -3), 0.0);
    EXPECT_DOUBLE_EQ(interpolate(t, 42), 100.0);
}

TEST(Interpolation, NearestRecord) {
    InterpolationTable t({{0, 5}, {100, 8}}, InterpolationMode::NearestRecord);
    EXPECT_DOUBLE_EQ(t(40), 5.0);
    EXPECT_DOUBLE_EQ(t(60), 8.0);
    EXPECT_DOUBLE_EQ(t(50), 5.0);  // tie -> earlier record
    EXPECT_DOUBLE_EQ(t(1e9), 8.0);
}

TEST(Interpolation, RejectsEmptyAndUnsorted) {
    try {
        InterpolationTable t({}, InterpolationMode::Linear);
        FAIL() << "empty table accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
    EXPECT_THROW(InterpolationTable({{1, 0}, {1, 2}}, InterpolationMode::Linear), Error);
    EXPECT_THROW(parse_interpolation_mode("cubic"), Error);
}

TEST(Interpolation, ExactAtNodesAndMonotoneBetween) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> step(0.1, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TablePoint> pts;
        double x = -10, y = 0;
        for (int i = 0; i < 12; ++i) {
            x += step(rng);
            y += step(rng);  // increasing y
            pts.push_back({x, y});
        }
        InterpolationTable t(pts, InterpolationMode::Linear);
        for (const auto& p : pts) {
            ASSERT_DOUBLE_EQ(t(p.x), p.y);
        }
        double prev = t(pts.front().x);
        for (double q = pts.front().x; q <= pts.back().x; q += 0.01) {
            double v = t(q);
            ASSERT_GE(v, prev - 1e-12);
            prev = v;
        }
    }
}

TEST(StateSpace, StorageChargeClosedForm) {
    auto sys = storage_system(50.0);
    auto x = sys.step(vec({1, 0}), 10.0);
    EXPECT_NEAR(x(0), 51.2667, 1e-9);
    EXPECT_NEAR(sys.state()(0), 51.2667, 1e-9);
}

TEST(StateSpace, StorageBothInputs) {
    auto sys = storage_system(50.0);
    EXPECT_NEAR(sys.step(vec({1, 1}), 100.0)(0), 48.667, 1e-9);
}

TEST(StateSpace, ZeroInputLeavesIntegratorUnchanged) {
    auto sys = storage_system(73.25);
    EXPECT_DOUBLE_EQ(sys.step(vec({0, 0}), 1234.5)(0), 73.25);
}

TEST(StateSpace, PureIntegratorIndependentOfSubsteps) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        double total = 1.0 + 500.0 * uni(rng);
        double dt = 0.01 + 5.0 * uni(rng);
        Eigen::VectorXd u = vec({uni(rng), uni(rng)});
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 1);
        Eigen::MatrixXd b(1, 2);
        b << 0.12667, -0.14;
        LinearStateSpace sys(a, b, vec({50}), dt);
        double expected = 50.0 + (b * u)(0) * total;
        ASSERT_NEAR(sys.step(u, total)(0), expected, 1e-9) << "dt=" << dt << " T=" << total;
    }
}

TEST(StateSpace, DimensionMismatch) {
    auto sys = storage_system(50);
    EXPECT_THROW(sys.step(vec({1, 0, 0}), 1.0), Error);
    EXPECT_THROW(sys.step(vec({1, 0}), 0.0), Error);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(1, 2);
    EXPECT_THROW(LinearStateSpace(a, b, Eigen::VectorXd::Zero(2)), Error);
    EXPECT_THROW(LinearStateSpace(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 1),
                                  Eigen::VectorXd::Zero(2)),
                 Error);
    EXPECT_THROW(LinearStateSpace(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                                  Eigen::VectorXd::Zero(1), 0.0),
                 Error);
}

TEST(StateSpace, SteadyStateSingular) {
    auto sys = storage_system(50);
    EXPECT_THROW(sys.steady_state(vec({1, 0})), Error);
}

TEST(StateSpace, SteadyStateZeroInput) {
    auto sys = turbine_system();
    EXPECT_TRUE(sys.steady_state(vec({0, 0, 0})).isZero());
}

TEST(StateSpace, TurbineSteadyStateMatchesIndependentSolve) {
    auto sys = turbine_system();
    auto xs = sys.steady_state(vec({1, 1, 15}));
    // A x = -B u with B u = (4750 + 29993 - 1.5, 1 + 45 + 3)
    auto oracle = cramer2({-0.3076, 0.0, 0.0008, -0.2}, {-34741.5, -49.0});
    EXPECT_NEAR(xs(0), oracle[0], 1e-6);
    EXPECT_NEAR(xs(1), oracle[1], 1e-9);
    // frozen from a LAPACK dense solve
    EXPECT_NEAR(xs(0), 112943.75812744, 1e-6);
    EXPECT_NEAR(xs(1), 696.77503251, 1e-7);
}

TEST(StateSpace, TurbineConvergesMonotonically) {
    auto sys = turbine_system();
    Eigen::VectorXd u = vec({1, 1, 15});
    Eigen::VectorXd target = sys.steady_state(u);
    double prev = (sys.state() - target).norm();
    for (int t = 1; t <= 30; ++t) {
        sys.step(u, 1.0);
        double err = (sys.state() - target).norm();
        // the exhaust temperature has a small overshoot-free transient; the
        // distance to x* shrinks every second
        EXPECT_LT(err, prev) << "t=" << t;
        prev = err;
    }
    EXPECT_LT((sys.state() - target).norm(), 0.01 * target.norm());
}

TEST(StateSpace, Rk4AgreesWithFineEuler) {
    for (const auto& u : {std::array<double, 3>{1, 1, 15}, std::array<double, 3>{0, 0, 15},
                          std::array<double, 3>{1, 0, -7}, std::array<double, 3>{0, 1, 39}}) {
        auto sys = turbine_system();
        std::array<double, 2> x0{20000.0, 300.0};
        sys.set_state(vec({x0[0], x0[1]}));
        sys.step(vec({u[0], u[1], u[2]}), 60.0);
        auto ref = euler_turbine(x0, u, 60.0, 1e-3);
        for (int i = 0; i < 2; ++i) {
            double scale = std::max(std::abs(ref[i]), 1.0);
            EXPECT_LT(std::abs(sys.state()(i) - ref[i]) / scale, 1e-3) << "component " << i;
        }
    }
}

TEST(Callbacks, SolarSurface) {
    auto reg = CallbackRegistry::with_builtins();
    std::vector<CallbackArg> args{1000.0, 504.0, 0.16};
    EXPECT_NEAR(eval_callback(reg, kSolarSurfaceCallback, args), 80640.0, 1e-9);
    std::vector<CallbackArg> dark{0.0, 504.0, 0.16};
    EXPECT_DOUBLE_EQ(eval_callback(reg, "solar-surface", dark), 0.0);
}

TEST(Callbacks, UnknownAndDuplicate) {
    auto reg = CallbackRegistry::with_builtins();
    std::vector<CallbackArg> none;
    EXPECT_THROW(eval_callback(reg, "getTurbineCurve", none), Error);
    EXPECT_THROW(reg.add(kSolarSurfaceCallback, [](auto) { return 0.0; }), Error);
    std::vector<CallbackArg> bad{std::string("x"), 1.0, 1.0};
    EXPECT_THROW(eval_callback(reg, kSolarSurfaceCallback, bad), Error);
}

TEST(Clock, AdvanceScalesAndFloorsToTick) {
    SimClock fast(1000, 0.1);
    EXPECT_DOUBLE_EQ(fast.advance(1.0), 1000.0);
    EXPECT_DOUBLE_EQ(fast.advance(0.0), 1000.0);

    SimClock slow(1, 0.1);
    EXPECT_NEAR(slow.advance(0.25), 0.2, 1e-12);
    EXPECT_NEAR(slow.advance(0.3), 0.5, 1e-12);
    EXPECT_THROW(slow.advance(-1), Error);
    EXPECT_THROW(slow.set(0.1), Error);
    EXPECT_THROW(SimClock(0.5, 0.1), Error);
}

TEST(Calendar, ParseFormatAndWeekday) {
    auto t = parse_iso8601("2016-06-06T00:00:00Z");
    EXPECT_EQ(t, 1465171200);
    EXPECT_EQ(day_of_week(t), 0);  // Monday
    EXPECT_EQ(day_of_week(t + 5 * 86400), 5);
    EXPECT_EQ(format_iso8601(t + 3661), "2016-06-06T01:01:01Z");
    EXPECT_EQ(parse_iso8601("2016-06-06 12:30"), t + 12 * 3600 + 1800);
    EXPECT_THROW(parse_iso8601("June 6"), Error);
}

TEST(Calendar, MapIntoReferenceYear) {
    double jul = static_cast<double>(parse_iso8601("2021-07-01T10:00:00Z"));
    EXPECT_DOUBLE_EQ(map_into_year(jul, 2016), static_cast<double>(parse_iso8601("2016-07-01T10:00:00Z")));
    double leap = static_cast<double>(parse_iso8601("2016-02-29T06:00:00Z"));
    EXPECT_DOUBLE_EQ(map_into_year(leap, 2015), static_cast<double>(parse_iso8601("2015-02-28T06:00:00Z")));
}

TEST(Radiance, CsvNearestRecordLookup) {
    std::istringstream csv(
        "timestamp,watt_per_msq\n"
        "2016-06-06T10:00:00Z,500\n"
        "2016-06-06T11:00:00Z,700\n"
        "2016-06-06T12:00:00Z,900\n");
    SunSimulator sun(load_radiance_csv(csv), 2016);
    double t = static_cast<double>(parse_iso8601("2019-06-06T11:20:00Z"));
    EXPECT_DOUBLE_EQ(sun.irradiance_at(t), 700.0);
    EXPECT_DOUBLE_EQ(sun.irradiance_at(t + 1800), 900.0);

    std::istringstream bad("time,value\n");
    EXPECT_THROW(load_radiance_csv(bad), Error);
}
