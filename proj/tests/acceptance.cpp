// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "calabi/action.hpp"
#include "calabi/harness.hpp"
#include "calabi/orbits.hpp"
#include "calabi/rotation.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace calabi;
namespace fs = std::filesystem;

namespace {
constexpr double kGolden = 0.6180339887;
const MapExpr kLinear = MapExpr::twist(TwistProfile::linear());
const ActionContext kCanon = ActionContext::canonical();

// Collects failed checks for one criterion.
struct Check {
    std::vector<std::string> failures;
    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol))
            failures.push_back(what + ": got " + format_real(got) + ", want " + format_real(want) + " +- " +
                               format_real(tol));
    }
};

MapExpr disk(double x, double y, double R, double c) {
    return MapExpr::local_disk_twist(AnnulusPoint(x, y), R, RadialProfile{c});
}

MapExpr acceptance_map(double c) { return MapExpr::compose(MapExpr::rigid(kGolden), disk(0.5, 0.5, 0.35, c)); }

void criterion1(Check& k) {
    oracle::Gen g(1);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const AnnulusPoint p(g.uniform(), g.uniform());
        worst = std::max(worst, std::abs(action_function_by_path(kLinear, kCanon, p) - oracle::linear_twist_action(p.y())));
    }
    k.near(worst, 0.0, 1e-8, "max path-integrated action error");
    k.near(calabi::calabi(kLinear).value, oracle::linear_twist_calabi, 1e-8, "Calabi");
    k.near(measure_action(kLinear, kCanon, MeasureSpec::boundary_lower()).value, 0.0, 1e-8, "lower boundary action");
    k.near(measure_action(kLinear, kCanon, MeasureSpec::boundary_upper()).value, 0.5, 1e-8, "upper boundary action");
}

void criterion2(Check& k) {
    for (double c : {0.5, 1.0, 6.0}) {
        const double got = disk_mean_action(RadialProfile{c}).value, want = oracle::unit_disk_mean_action(c);
        k.near(got, want, 1e-6 * want, "unit disk mean action c=" + format_real(c));
        k.require(got > 0.0, "unit disk mean action not positive");
    }
    for (auto [c, R] : {std::pair{50.8, 0.35}, {3.0, 0.2}}) {
        const double want = oracle::disk_calabi_magnitude(c, R);
        ActionSettings s;
        s.area.tolerance = 1e-8 * want;
        k.near(std::abs(calabi::calabi(disk(0.5, 0.5, R, c), kCanon, s).value), want, 1e-6 * want,
               "annulus disk Calabi magnitude c=" + format_real(c));
    }
}

void criterion3(Check& k) {
    k.near(lemma_boundary_identity_defect(kLinear), 0.0, 1e-6, "linear twist");
    k.near(lemma_boundary_identity_defect(MapExpr::rigid(0.381966)), 0.0, 1e-6, "rigid rotation");
    oracle::Gen g(3);
    for (int i = 0; i < 20; ++i) {
        const MapExpr m = gen::random_composition(g);
        k.near(lemma_boundary_identity_defect(m), 0.0, 1e-6, describe(m));
    }
}

void criterion4(Check& k) {
    oracle::Gen g(4);
    for (int i = 0; i < 10; ++i) {
        const MapExpr a = gen::random_leaf(g), b = gen::random_leaf(g);
        k.near(additivity_defect(a, b), 0.0, 1e-8, describe(a) + " ; " + describe(b));
    }
    const MapExpr h = disk(0.5, 0.5, 0.35, 50.8);
    const double ah = calabi::calabi(h).value;
    k.near(calabi::calabi(MapExpr::compose(MapExpr::rigid(kGolden), h)).value, ah, 1e-8, "rigid after disk");
}

void criterion5(Check& k) {
    // pairs with equal rotation numbers
    const std::vector<std::tuple<MapExpr, MeasureSpec, MeasureSpec>> pairs = {
        {acceptance_map(50.8), MeasureSpec::area(), MeasureSpec::boundary_lower()},
        {MapExpr::rigid(0.3819), MeasureSpec::boundary_upper(), MeasureSpec::boundary_lower()},
        {disk(0.3, 0.4, 0.25, 8.0), MeasureSpec::area(), MeasureSpec::boundary_upper()},
    };
    for (const auto& [m, mu1, mu2] : pairs) {
        const double r1 = measure_rotation(m, mu1).value, r2 = measure_rotation(m, mu2).value;
        k.near(r1, r2, 1e-8, "rotation numbers of " + mu1.describe() + ", " + mu2.describe());
        for (double c : {-1.0, -0.3, 0.7, 2.0}) {
            const ShiftedDifference t = shifted_action_difference(m, mu1, mu2, c);
            k.near(t.shifted_diff, t.base_diff, 1e-6, describe(m) + " shift " + format_real(c));
        }
    }
    for (double c : {-1.0, -0.3, 0.7, 2.0}) {
        const ShiftedDifference t =
            shifted_action_difference(kLinear, MeasureSpec::boundary_upper(), MeasureSpec::boundary_lower(), c);
        k.near(t.shifted_diff - t.base_diff, c, 1e-6, "linear twist boundary pair shift " + format_real(c));
    }
}

void criterion6(Check& k) {
    const auto rep = example_local_perturbation(kGolden, AnnulusPoint(0.5, 0.5), 0.35, 50.8);
    const auto& v = rep.verification;
    k.near(v.gap.gap, 0.2, 0.005, "action gap");
    k.require(v.q_threshold == 6, "q_threshold " + std::to_string(v.q_threshold));
    k.require(v.q_max == 8, "q_max " + std::to_string(v.q_max));
    const PeriodResult* six = nullptr;
    for (const auto& r : v.periods)
        if (r.q == 6) six = &r;
    k.require(six && six->verdict == Verdict::pass, "q = 6 not PASS");
    if (!six) return;

    std::vector<const PeriodicOrbit*> good;
    for (std::size_t i = 0; i < six->orbits.size(); ++i) {
        const auto& o = six->orbits[i];
        k.require(o.residual < kCertifiedResidual, "uncertified orbit at q = 6");
        if (six->in_bracket[i] && !o.degenerate) good.push_back(&o);
    }
    k.require(good.size() >= 2, "fewer than two bracketed orbits at q = 6");
    for (std::size_t i = 0; i < good.size(); ++i)
        for (std::size_t j = i + 1; j < good.size(); ++j)
            k.require(orbit_distance(*good[i], *good[j]) > 1e-6, "coincident orbits");

    // brute-force scan of the independently coded return map
    const auto f = oracle::rigid_then_disk(kGolden, 0.5, 0.5, 0.35, 50.8);
    int confirmed = 0;
    for (const PeriodicOrbit* o : good) {
        const auto& z = o->points.front();
        k.near(oracle::sup(oracle::return_defect(f, {z.x(), z.y}, o->q, o->p)), 0.0, 1e-9, "oracle return defect");
        const auto scan = oracle::grid_scan(f, o->q, o->p, 2000);
        std::vector<oracle::Pt> pts;
        for (const auto& pt : o->points) pts.push_back({pt.frac, pt.y});
        if (std::any_of(scan.begin(), scan.end(),
                        [&](const oracle::Orbit& s) { return oracle::orbit_distance(pts, s.points) < 1e-6; }))
            ++confirmed;
    }
    k.require(confirmed >= 2, "grid scan confirmed " + std::to_string(confirmed) + " orbits");
}

void criterion7(Check& k) {
    for (double a : {kGolden, std::sqrt(2.0) - 1.0}) {
        const MapExpr m = MapExpr::rigid(a);
        k.require(action_gap(m, MeasureSpec::area(), MeasureSpec::boundary_lower()).gap == 0.0, "nonzero gap");
        bool degenerate = false;
        try {
            verify_theorem(m, MeasureSpec::area(), MeasureSpec::boundary_lower(), 8);
        } catch (const DegenerateGap&) {
            degenerate = true;
        }
        k.require(degenerate, "no DegenerateGap");
        for (int q = 1; q <= 8; ++q)
            for (std::int64_t p : candidate_windings(m, q))
                k.require(find_periodic_orbits(m, q, p).empty(),
                          "orbit found at q=" + std::to_string(q) + " p=" + std::to_string(p));
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void criterion8(Check& k) {
    oracle::Gen g(8);
    std::vector<MapExpr> maps = {MapExpr::rigid(0.37), kLinear, MapExpr::twist(TwistProfile::bump(0.6)),
                                 disk(0.5, 0.5, 0.35, 50.8), gen::all_builtins()};
    for (int i = 0; i < 10; ++i) maps.push_back(gen::random_composition(g));
    for (const auto& m : maps) k.near(area_defect(m, 64), 0.0, 1e-9, "area defect " + describe(m));

    const MapExpr all = gen::all_builtins();
    for (int i = 0; i < 20; ++i) {
        const AnnulusPoint p(g.uniform(), g.uniform());
        const PolylinePath path({{0.0, 0.0}, {g.uniform(-1.0, 2.0), g.uniform()}, {p.x(), p.y()}});
        k.near(path_independence_defect(all, kCanon, p, path), 0.0, 1e-8, "path independence");
    }

    const double tau = 2 * std::numbers::pi;
    auto u = [&](const LiftedPoint& p) { return std::cos(tau * p.frac) * p.y + 0.3 * std::sin(tau * p.frac); };
    // Iterated strong disks shear the action to gradients near 1e4, past the
    // area quadrature's cell budget, so these draws stay moderate.
    for (int i = 0; i < 4; ++i) {
        const MapExpr m = gen::random_composition(g, 3, 10.0, false);
        for (const auto& mu : {MeasureSpec::area(), MeasureSpec::boundary_lower(), MeasureSpec::boundary_upper()}) {
            ActionSettings s;
            s.birkhoff.n_iter = 200000;
            s.birkhoff.tolerance = 1e-3;
            const ActionValue base = measure_action(m, kCanon, mu, s);
            const ActionValue shifted = measure_average(
                m, mu, [&](const LiftedPoint& p) { return action_function(m, kCanon, p) + u(eval_lift(m, p)) - u(p); },
                s);
            // Birkhoff sums of the coboundary telescope: |u| <= 1.3
            const double bound = 2.0 * (base.error_estimate + shifted.error_estimate) + 2.6 / s.birkhoff.n_iter + 1e-12;
            k.near(shifted.value, base.value, bound, "cohomologous " + describe(m) + " " + mu.describe());
        }
    }

    const fs::path dir = fs::temp_directory_path() / "calabi_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    for (int run = 0; run < 2; ++run) {
        const fs::path sub = dir / std::to_string(run);
        fs::create_directories(sub);
        const std::string cmd = std::string("cd '") + sub.string() + "' && '" + CALABI_CLI_PATH +
                                "' verify --config '" + CALABI_CONFIG_DIR + "/perturbed_rotation.json' > stdout.txt 2>&1";
        k.require(std::system(cmd.c_str()) == 0, "verify run " + std::to_string(run) + " did not exit 0");
        std::string all_files;
        for (const char* name : {"stdout.txt", "perturbed_rotation_report.txt", "perturbed_rotation_report.json", "perturbed_rotation_orbits.csv",
                                 "perturbed_rotation_plot.csv"}) {
            const std::string text = slurp(sub / name);
            k.require(!text.empty(), std::string("empty ") + name);
            all_files += text + '\0';
        }
        outputs.push_back(all_files);
    }
    k.require(outputs[0] == outputs[1], "verify outputs differ between runs");
}
}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<void(Check&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "linear twist closed-form action", 5, criterion1},
        {2, "disk twist mean action", 10, criterion2},
        {3, "boundary rotation identity", 60, criterion3},
        {4, "Calabi additivity", 30, criterion4},
        {5, "shift invariance of action differences", 30, criterion5},
        {6, "local perturbation verification", 300, criterion6},
        {7, "irrational rotation negative control", 60, criterion7},
        {8, "property suites and determinism", 120, criterion8},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Check k;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(k);
        } catch (const std::exception& e) {
            k.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) k.failures.push_back("runtime " + format_real(secs) + " s over budget");
        const bool ok = k.failures.empty();
        failed += !ok;
        std::printf("criterion %d: %s  %s (%.2f s)\n", c.id, ok ? "PASS" : "FAIL", c.name, secs);
        for (const auto& f : k.failures) std::printf("    %s\n", f.c_str());
    }
    return failed == 0 ? 0 : 1;
}
