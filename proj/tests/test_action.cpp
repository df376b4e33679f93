#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "calabi/action.hpp"
#include "calabi/orbits.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace calabi;

namespace {
const MapExpr kLinear = MapExpr::twist(TwistProfile::linear());
const auto kCanon = ActionContext::canonical();

MapExpr disk(double cx, double cy, double R, double c) {
    return MapExpr::local_disk_twist(AnnulusPoint(cx, cy), R, RadialProfile{c});
}
}  // namespace

TEST(ActionFunction, RigidRotationIsZero) {
    oracle::Gen g(51);
    const auto m = MapExpr::rigid(0.4142);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(action_function(m, kCanon, AnnulusPoint(g.uniform(), g.uniform())), 0.0);
}

TEST(ActionFunction, LinearTwistClosedForm) {
    EXPECT_DOUBLE_EQ(action_function(kLinear, kCanon, AnnulusPoint(0.3, 1.0)), 0.5);
    oracle::Gen g(52);
    for (int i = 0; i < 100; ++i) {
        const AnnulusPoint p(g.uniform(), g.uniform());
        EXPECT_NEAR(action_function(kLinear, kCanon, p), oracle::linear_twist_action(p.y()), 1e-15);
        EXPECT_NEAR(action_function_by_path(kLinear, kCanon, p), oracle::linear_twist_action(p.y()), 1e-10);
    }
}

TEST(ActionFunction, TwistAfterRotationIgnoresRotation) {
    oracle::Gen g(53);
    for (double a : {0.0, 0.25, 0.618, -1.3}) {
        const auto m = MapExpr::compose(kLinear, MapExpr::rigid(a));
        for (int i = 0; i < 20; ++i) {
            const AnnulusPoint p(g.uniform(), g.uniform());
            EXPECT_NEAR(action_function(m, kCanon, p), 0.5 * p.y() * p.y(), 1e-14);
        }
    }
}

TEST(ActionFunction, ClosedFormsAgreeWithLineIntegrals) {
    oracle::Gen g(54);
    for (int i = 0; i < 15; ++i) {
        const MapExpr m = gen::random_composition(g);
        for (int k = 0; k < 10; ++k) {
            const AnnulusPoint p(g.uniform(), g.uniform());
            EXPECT_NEAR(action_function(m, kCanon, p), action_function_by_path(m, kCanon, p), 1e-8) << describe(m);
        }
    }
}

TEST(ActionFunction, ShiftedFormClosedFormAgreesWithLineIntegral) {
    oracle::Gen g(55);
    const auto ctx = ActionContext::shifted(0.7);
    for (int i = 0; i < 10; ++i) {
        const MapExpr m = gen::random_composition(g);
        const AnnulusPoint p(g.uniform(), g.uniform());
        EXPECT_NEAR(action_function(m, ctx, p), action_function_by_path(m, ctx, p), 1e-8) << describe(m);
    }
}

TEST(ActionFunction, ExplicitExactFormAddsCoboundary) {
    // beta' = beta + du with u = sin(2 pi x) y (1 - y): g' = g + u o f - u, normalized at x0.
    const double tau = 2 * std::numbers::pi;
    auto u = [&](double x, double y) { return std::sin(tau * x) * y * (1 - y); };
    OneForm form(ExplicitField{[&](double x, double y) { return y + tau * std::cos(tau * x) * y * (1 - y); },
                               [&](double x, double y) { return std::sin(tau * x) * (1 - 2 * y); }, true});
    const ActionContext ctx{form, AnnulusPoint(0.0, 0.0)};
    const MapExpr m = MapExpr::compose(disk(0.5, 0.5, 0.3, 4.0), kLinear);
    oracle::Gen g(56);
    for (int i = 0; i < 10; ++i) {
        const AnnulusPoint p(g.uniform(), g.uniform());
        const AnnulusPoint fp = eval(m, p);
        const double expected = action_function(m, kCanon, p) + u(fp.x(), fp.y()) - u(p.x(), p.y());
        EXPECT_NEAR(action_function(m, ctx, p), expected, 1e-8);
    }
}

TEST(ActionFunction, TabulatedProfileUsesLineIntegral) {
    std::vector<double> values;
    for (int i = 0; i <= 64; ++i) values.push_back(i / 64.0);
    const auto m = MapExpr::twist(TwistProfile::tabulated(values));
    for (double y : {0.2, 0.5, 0.9}) EXPECT_NEAR(action_function(m, kCanon, AnnulusPoint(0.3, y)), 0.5 * y * y, 1e-8);
}

TEST(PathIndependence, Examples) {
    const PolylinePath dogleg({{0.0, 0.0}, {0.8, 0.1}, {0.35, 0.6}});
    EXPECT_LT(path_independence_defect(kLinear, kCanon, AnnulusPoint(0.35, 0.6), dogleg), 1e-9);
    EXPECT_LT(path_independence_defect(MapExpr::rigid(0.3), kCanon, AnnulusPoint(0.35, 0.6), dogleg), 1e-12);
    oracle::Gen g(57);
    const MapExpr all = gen::all_builtins();
    for (int i = 0; i < 20; ++i) {
        const AnnulusPoint p(g.uniform(), g.uniform());
        const PolylinePath path({{0.0, 0.0}, {g.uniform(-1.0, 2.0), g.uniform()}, {p.x(), p.y()}});
        EXPECT_LT(path_independence_defect(all, kCanon, p, path), 1e-8);
    }
    EXPECT_THROW(path_independence_defect(kLinear, kCanon, AnnulusPoint(0.35, 0.6),
                                          PolylinePath({{0.1, 0.0}, {0.35, 0.6}})),
                 std::invalid_argument);
}

TEST(Calabi, Examples) {
    EXPECT_EQ(calabi::calabi(MapExpr::rigid(0.77)).value, 0.0);
    const ActionValue t = calabi::calabi(kLinear);
    EXPECT_NEAR(t.value, oracle::linear_twist_calabi, 1e-12);
    EXPECT_LE(t.error_estimate, 1e-8);
}

TEST(Calabi, DiskTwistMatchesRadialOracle) {
    for (auto [c, R] : {std::pair{50.8, 0.35}, {3.0, 0.2}, {-7.5, 0.3}}) {
        const MapExpr h = disk(0.5, 0.5, R, c);
        const double ref = oracle::disk_calabi_magnitude(c, R);
        // absolute area tolerance scaled to the size of the answer
        ActionSettings s;
        s.area.tolerance = 1e-8 * std::abs(ref);
        const ActionValue a = calabi::calabi(h, kCanon, s);
        EXPECT_NEAR(std::abs(a.value), std::abs(ref), 1e-6 * std::abs(ref));
        // counterclockwise rotation (c > 0) under dy ^ dx has negative Calabi
        EXPECT_EQ(a.value < 0, c > 0);
        EXPECT_NEAR(calabi_polar(std::get<LocalDiskTwist>(h.node().v)).value, -ref, 1e-12 * std::abs(ref));
    }
}

TEST(Calabi, UnitDiskConventionIsPositive) {
    for (double c : {0.5, 1.0, 6.0}) {
        const ActionValue a = disk_mean_action(RadialProfile{c});
        EXPECT_GT(a.value, 0.0);
        EXPECT_NEAR(a.value, oracle::unit_disk_mean_action(c), 1e-12 * c);
    }
}

TEST(MeasureAction, Examples) {
    EXPECT_EQ(measure_action(kLinear, kCanon, MeasureSpec::boundary_lower()).value, 0.0);
    EXPECT_NEAR(measure_action(kLinear, kCanon, MeasureSpec::boundary_upper()).value, 0.5, 1e-15);
    const auto rot = MapExpr::rigid(0.381966);
    for (const auto& mu : {MeasureSpec::boundary_lower(), MeasureSpec::boundary_upper(), MeasureSpec::area(),
                           MeasureSpec::empirical(AnnulusPoint(0.2, 0.3), 2000)})
        EXPECT_EQ(measure_action(rot, kCanon, mu).value, 0.0) << mu.describe();
}

TEST(MeasureAction, EmpiricalOnInvariantCircle) {
    const ActionValue a = measure_action(kLinear, kCanon, MeasureSpec::empirical(AnnulusPoint(0.1, 0.3), 5000));
    EXPECT_NEAR(a.value, 0.045, 1e-15);
}

TEST(MeasureAction, OrbitMeasureAverages) {
    const PeriodicOrbit o = orbit_from_point(kLinear, AnnulusPoint(0.2, 0.34), 3, 1);
    const ActionValue a = measure_action(kLinear, kCanon, MeasureSpec::orbit(o));
    EXPECT_NEAR(a.value, 1.0 / 18.0, 1e-12);
    EXPECT_EQ(a.error_estimate, 0.0);
}

TEST(MeasureSpec, Validation) {
    PeriodicOrbit bad;
    bad.residual = 1e-3;
    bad.points = {LiftedPoint{}};
    EXPECT_THROW(MeasureSpec::orbit(bad), std::invalid_argument);
    EXPECT_THROW(MeasureSpec::empirical(AnnulusPoint(0.1, 0.1), 999), std::invalid_argument);
}

TEST(MeasureAction, BirkhoffToleranceIsEnforced) {
    // the orbit of a point inside a strongly twisted disk equidistributes slowly
    ActionSettings s;
    s.birkhoff.tolerance = 1e-14;
    EXPECT_THROW(measure_action(disk(0.5, 0.5, 0.3, 5.0), kCanon, MeasureSpec::empirical(AnnulusPoint(0.52, 0.5), 1000), s),
                 NonConvergent);
}

TEST(MeasureActionProperty, CohomologousObservablesShareAverages) {
    // u o f - u averages to zero against every invariant measure.
    const double tau = 2 * std::numbers::pi;
    auto u = [&](const LiftedPoint& p) { return std::cos(tau * p.frac) * p.y + 0.3 * std::sin(tau * p.frac); };
    oracle::Gen g(58);
    for (int i = 0; i < 6; ++i) {
        const MapExpr m = gen::random_composition(g);
        for (const auto& mu : {MeasureSpec::area(), MeasureSpec::boundary_lower(), MeasureSpec::boundary_upper()}) {
            ActionSettings s;
            s.birkhoff.n_iter = 200000;
            s.birkhoff.tolerance = 1e-3;
            const ActionValue base = measure_action(m, kCanon, mu, s);
            const ActionValue shifted = measure_average(
                m, mu,
                [&](const LiftedPoint& p) { return action_function(m, kCanon, p) + u(eval_lift(m, p)) - u(p); }, s);
            // Birkhoff sums of u o f - u telescope to (u(f^n z) - u(z)) / n, |u| <= 1.3
            const double bound = 2.0 * (base.error_estimate + shifted.error_estimate) + 2.6 / s.birkhoff.n_iter + 1e-12;
            EXPECT_LE(std::abs(base.value - shifted.value), bound) << describe(m) << " " << mu.describe();
        }
    }
}

TEST(Additivity, Examples) {
    EXPECT_EQ(additivity_defect(MapExpr::rigid(0.2), MapExpr::rigid(0.7)), 0.0);
    EXPECT_LT(additivity_defect(MapExpr::rigid(0.6180339887), disk(0.5, 0.5, 0.35, 50.8)), 1e-8);
    EXPECT_LT(additivity_defect(kLinear, kLinear), 1e-8);
    EXPECT_NEAR(calabi::calabi(MapExpr::iterate(kLinear, 2)).value, 1.0 / 3.0, 1e-10);
}

TEST(AdditivityProperty, RandomPairs) {
    oracle::Gen g(59);
    for (int i = 0; i < 10; ++i) {
        const MapExpr a = gen::random_leaf(g), b = gen::random_composition(g, 2);
        EXPECT_LT(additivity_defect(a, b), 1e-8) << describe(a) << " ; " << describe(b);
    }
}

TEST(AdditivityProperty, IterateScalesCalabi) {
    oracle::Gen g(60);
    for (int i = 0; i < 5; ++i) {
        const MapExpr m = gen::random_leaf(g);
        const int k = g.integer(2, 4);
        EXPECT_NEAR(calabi::calabi(MapExpr::iterate(m, k)).value, k * calabi::calabi(m).value, 1e-8) << describe(m);
    }
}

TEST(ShiftedDifference, Examples) {
    const ShiftedDifference t =
        shifted_action_difference(kLinear, MeasureSpec::boundary_upper(), MeasureSpec::boundary_lower(), 1.0);
    EXPECT_NEAR(t.shifted_diff - t.base_diff, 1.0, 1e-12);

    const ShiftedDifference same = shifted_action_difference(disk(0.4, 0.5, 0.2, 3.0), MeasureSpec::area(),
                                                             MeasureSpec::area(), 0.9);
    EXPECT_EQ(same.base_diff, 0.0);
    EXPECT_EQ(same.shifted_diff, 0.0);

    for (double c : {-1.0, -0.3, 0.7, 2.0}) {
        const ShiftedDifference r = shifted_action_difference(MapExpr::rigid(0.3819), MeasureSpec::boundary_upper(),
                                                              MeasureSpec::boundary_lower(), c);
        EXPECT_NEAR(r.shifted_diff - r.base_diff, 0.0, 1e-12);
    }
}
