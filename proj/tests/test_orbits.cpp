#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "calabi/orbits.hpp"
#include "calabi/parallel.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace calabi;

namespace {
const MapExpr kLinear = MapExpr::twist(TwistProfile::linear());
constexpr double kGolden = 0.6180339887;

MapExpr acceptance_map() {
    return MapExpr::compose(MapExpr::rigid(kGolden),
                            MapExpr::local_disk_twist(AnnulusPoint(0.5, 0.5), 0.35, RadialProfile{50.8}));
}

// Checks the record invariants every returned orbit must satisfy.
void expect_consistent(const MapExpr& m, const PeriodicOrbit& o) {
    ASSERT_EQ(static_cast<int>(o.points.size()), o.q);
    EXPECT_LT(o.residual, kCertifiedResidual);
    EXPECT_EQ(o.q % o.least_period, 0);
    EXPECT_EQ(o.points.front().sheet, 0);
    for (int j = 0; j + 1 < o.q; ++j) {
        const LiftedPoint next = eval_lift(m, o.points[j]);
        EXPECT_LT(std::abs(lifted_dx(next, o.points[j + 1])), 1e-12);
        EXPECT_LT(std::abs(next.y - o.points[j + 1].y), 1e-12);
    }
    // winding of the stored points closes up to exactly p
    const LiftedPoint last = eval_lift(m, o.points.back());
    EXPECT_EQ(std::llround(lifted_dx(last, o.points.front())), o.p);
}
}  // namespace

TEST(FindPeriodicOrbits, LinearTwistCircleIsDegenerate) {
    const auto orbits = find_periodic_orbits(kLinear, 2, 1);
    ASSERT_FALSE(orbits.empty());
    EXPECT_LE(static_cast<int>(orbits.size()), SearchConfig{}.max_degenerate_representatives);
    for (const auto& o : orbits) {
        expect_consistent(kLinear, o);
        EXPECT_TRUE(o.degenerate);
        for (const auto& pt : o.points) EXPECT_NEAR(pt.y, 0.5, 1e-12);
    }
}

TEST(FindPeriodicOrbits, IrrationalRotationHasNone) {
    const auto m = MapExpr::rigid(0.618);
    for (int q = 1; q <= 6; ++q)
        for (int p = 0; p <= q; ++p) EXPECT_TRUE(find_periodic_orbits(m, q, p).empty()) << q << "/" << p;
}

TEST(FindPeriodicOrbits, Validation) {
    EXPECT_THROW(find_periodic_orbits(kLinear, 0, 0), std::invalid_argument);
    SearchConfig bad;
    bad.grid = 0;
    EXPECT_THROW(find_periodic_orbits(kLinear, 1, 0, bad), std::invalid_argument);
}

TEST(FindPeriodicOrbits, AcceptanceMapMatchesGridScan) {
    const MapExpr m = acceptance_map();
    const int q = 6;
    const std::int64_t p = std::llround(q * kGolden);
    const auto orbits = find_periodic_orbits(m, q, p);
    int nondegenerate = 0;
    for (const auto& o : orbits) {
        expect_consistent(m, o);
        if (!o.degenerate) ++nondegenerate;
    }
    EXPECT_GE(nondegenerate, 2);

    // every orbit solves the independently coded map, and the brute-force
    // scan reaches at least two of them
    const auto f = oracle::rigid_then_disk(kGolden, 0.5, 0.5, 0.35, 50.8);
    for (const auto& o : orbits) {
        const auto& z = o.points.front();
        EXPECT_LT(oracle::sup(oracle::return_defect(f, {z.x(), z.y}, q, p)), 1e-9);
    }
    const auto scan = oracle::grid_scan(f, q, p, 400);
    int matched = 0;
    for (const auto& s : scan) {
        for (const auto& o : orbits) {
            std::vector<oracle::Pt> pts;
            for (const auto& pt : o.points) pts.push_back({pt.frac, pt.y});
            if (oracle::orbit_distance(pts, s.points) < 1e-6) {
                ++matched;
                break;
            }
        }
    }
    EXPECT_GE(matched, 2);
}

TEST(RefineOrbit, Examples) {
    const PeriodicOrbit exact = orbit_from_point(kLinear, AnnulusPoint(0.3, 0.4), 5, 2);
    EXPECT_EQ(exact.residual, 0.0);
    const PeriodicOrbit same = refine_orbit(kLinear, exact, 1e-14);
    ASSERT_EQ(same.points.size(), exact.points.size());
    for (std::size_t j = 0; j < same.points.size(); ++j) EXPECT_EQ(same.points[j], exact.points[j]);

    PeriodicOrbit perturbed = exact;
    perturbed.points.front().y += 1e-4;
    const PeriodicOrbit back = refine_orbit(kLinear, perturbed, 1e-12);
    EXPECT_LT(back.residual, 1e-12);
    for (const auto& pt : back.points) EXPECT_NEAR(pt.y, 0.4, 1e-12);

    PeriodicOrbit far = exact;
    far.points.front().y = 0.5;  // residual 0.1 after five iterates
    EXPECT_THROW(refine_orbit(kLinear, far, 1e-12), NonConvergent);
    EXPECT_THROW(refine_orbit(kLinear, PeriodicOrbit{}, 1e-12), std::invalid_argument);
}

TEST(OrbitAction, Examples) {
    const auto ctx = ActionContext::canonical();
    for (auto [q, p] : {std::pair{2, 1}, {3, 1}, {5, 3}, {7, 7}}) {
        const double y = static_cast<double>(p) / q;
        const PeriodicOrbit o = orbit_from_point(kLinear, AnnulusPoint(0.1, y), q, p);
        EXPECT_NEAR(orbit_action(kLinear, ctx, o), 0.5 * y * y, 1e-15);
        EXPECT_NEAR(o.action, 0.5 * y * y, 1e-15);
    }
    // every point outside the disk is a fixed point of this map, where g = 0
    const auto m = MapExpr::compose(MapExpr::rigid(1.0),
                                    MapExpr::local_disk_twist(AnnulusPoint(0.5, 0.5), 0.3, RadialProfile{9.0}));
    const PeriodicOrbit fixed = orbit_from_point(m, AnnulusPoint(0.05, 0.1), 1, 1);
    EXPECT_EQ(orbit_action(m, ctx, fixed), 0.0);
}

TEST(OrbitAction, AcceptanceOrbitsMatchPathOracle) {
    const MapExpr m = acceptance_map();
    const auto f = oracle::rigid_then_disk(kGolden, 0.5, 0.5, 0.35, 50.8);
    const auto orbits = find_periodic_orbits(m, 6, 4);
    ASSERT_FALSE(orbits.empty());
    int bracketed = 0;
    for (const auto& o : orbits) {
        double mean = 0.0;
        for (const auto& pt : o.points) mean += oracle::path_action(f, {pt.frac, pt.y}) / o.q;
        EXPECT_NEAR(o.action, mean, 1e-6);
        // between the boundary action 0 and the area action -pi c R^4 / 12, +-1e-3
        if (o.action <= 1e-3 && o.action >= -oracle::disk_calabi_magnitude(50.8, 0.35) - 1e-3) ++bracketed;
    }
    // not every orbit lies in the bracket; the verifier needs two that do
    EXPECT_GE(bracketed, 2);
}

// Invariants ----------------------------------------------------------------

TEST(OrbitProperty, DeduplicationIsIdempotent) {
    oracle::Gen g(81);
    for (int i = 0; i < 6; ++i) {
        const MapExpr m = gen::random_composition(g, 2);
        SearchConfig cfg;
        cfg.grid = 16;
        const int q = g.integer(1, 3);
        const std::int64_t p = g.integer(-1, q);
        const auto once = find_periodic_orbits(m, q, p, cfg);
        const auto twice = deduplicate(once, cfg.dedup_tolerance);
        ASSERT_EQ(once.size(), twice.size()) << describe(m);
        for (std::size_t k = 0; k < once.size(); ++k) {
            EXPECT_EQ(once[k].points, twice[k].points);
            for (std::size_t l = k + 1; l < once.size(); ++l)
                EXPECT_GT(orbit_distance(once[k], once[l]), cfg.dedup_tolerance);
        }
    }
}

TEST(OrbitProperty, IndependentOfWorkerCount) {
    const MapExpr m = acceptance_map();
    set_worker_count(1);
    const auto one = find_periodic_orbits(m, 7, 4);
    for (int w : {2, 5}) {
        set_worker_count(w);
        const auto many = find_periodic_orbits(m, 7, 4);
        ASSERT_EQ(one.size(), many.size());
        for (std::size_t k = 0; k < one.size(); ++k) {
            EXPECT_EQ(one[k].points, many[k].points);
            EXPECT_EQ(one[k].residual, many[k].residual);
        }
    }
    set_worker_count(0);
    const auto again = find_periodic_orbits(m, 7, 4);
    ASSERT_EQ(one.size(), again.size());
}

TEST(OrbitProperty, IterateRegroupsTwistOrbits) {
    // a (q, p) orbit of the linear twist sits on y = p/q; under the k-th
    // iterate it has period q / gcd(q, k) and winding k p / gcd(q, k)
    for (auto [q, p, k] : {std::tuple{4, 1, 2}, {6, 5, 3}, {5, 2, 2}, {6, 1, 4}}) {
        const int d = std::gcd(q, k);
        const MapExpr mk = MapExpr::iterate(kLinear, k);
        const auto found = find_periodic_orbits(mk, q / d, static_cast<std::int64_t>(k) * p / d);
        ASSERT_FALSE(found.empty()) << q << " " << p << " " << k;
        for (const auto& o : found) {
            expect_consistent(mk, o);
            for (const auto& pt : o.points) EXPECT_NEAR(pt.y, static_cast<double>(p) / q, 1e-12);
        }
    }
}

TEST(OrbitProperty, LeastPeriodDetectsRepeats) {
    // a fixed point counted as a (2, 2) orbit has least period 1
    const PeriodicOrbit o = orbit_from_point(kLinear, AnnulusPoint(0.4, 1.0), 2, 2);
    EXPECT_EQ(o.least_period, 1);
    const PeriodicOrbit prime = orbit_from_point(kLinear, AnnulusPoint(0.4, 0.5), 2, 1);
    EXPECT_EQ(prime.least_period, 2);
}
