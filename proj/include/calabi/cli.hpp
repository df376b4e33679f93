#pragma once

// Command-line front end. Exit codes:
//   0  success / every verdict PASS
//   1  at least one FAIL verdict
//   2  INCONCLUSIVE verdict, DegenerateGap or NonConvergent
//   3  usage or configuration error

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "calabi/config.hpp"
#include "calabi/harness.hpp"
#include "calabi/parallel.hpp"
#include "calabi/report.hpp"
#include "calabi/rotation.hpp"

namespace calabi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInconclusive = 2;
inline constexpr int kExitUsage = 3;

struct Common {
    std::string config;
    std::string map;
    int workers = 0;
    std::string report, json, orbits_csv, plot_csv;
};

namespace detail {

inline ExperimentConfig load(const Common& c) {
    if (!c.config.empty() && !c.map.empty()) throw ConfigError("--map", "give either --config or --map, not both");
    ExperimentConfig cfg;
    if (!c.config.empty()) {
        std::ifstream in(c.config);
        if (!in) throw ConfigError("--config", "cannot read " + c.config);
        std::stringstream buf;
        buf << in.rdbuf();
        cfg = parse_config(buf.str(), c.config);
    } else if (!c.map.empty()) {
        cfg.map = parse_map_spec(c.map);
        cfg.measures = {{"boundary_lower", MeasureSpec::boundary_lower()},
                        {"boundary_upper", MeasureSpec::boundary_upper()},
                        {"area", MeasureSpec::area()}};
    } else {
        throw ConfigError("--config", "a map is required (--config FILE or --map SPEC)");
    }
    if (!c.report.empty()) cfg.output.report = c.report;
    if (!c.json.empty()) cfg.output.json = c.json;
    if (!c.orbits_csv.empty()) cfg.output.orbits_csv = c.orbits_csv;
    if (!c.plot_csv.empty()) cfg.output.plot_csv = c.plot_csv;
    return cfg;
}

template <class Writer>
void write_file(const std::string& path, Writer&& w) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("/output", "cannot write " + path);
    w(out);
}

inline AnnulusPoint parse_point(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError("--point", "expected x,y but got '" + s + "'");
    try {
        return AnnulusPoint(std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("--point", "'" + s + "': " + e.what());
    }
}

inline int verdict_exit(const VerificationReport& r) {
    if (r.any(Verdict::fail)) return kExitFail;
    if (r.any(Verdict::inconclusive)) return kExitInconclusive;
    return kExitOk;
}

inline void emit_verification(const ExperimentConfig& cfg, const MapExpr& m, const VerificationReport& rep,
                              std::ostream& out) {
    const ActionSettings& s = cfg.verify.action;
    std::ostringstream text;
    write_report_text(text, m, rep, s);
    out << text.str();
    write_file(cfg.output.report, [&](std::ostream& f) { f << text.str(); });
    write_file(cfg.output.json, [&](std::ostream& f) { f << report_json(m, rep, map_to_json(m), s).dump(2) << "\n"; });
    const auto orbits = all_orbits(rep);
    write_file(cfg.output.orbits_csv, [&](std::ostream& f) { write_orbits_csv(f, orbits); });
    write_file(cfg.output.plot_csv,
               [&](std::ostream& f) { write_plot_csv(f, m, orbits, cfg.plot.samples, cfg.plot.iterations); });
}

inline int cmd_action(const ExperimentConfig& cfg, const std::vector<std::string>& point_args, std::ostream& out) {
    using calabi::detail::pm;
    const auto& s = cfg.verify.action;
    std::vector<AnnulusPoint> points = cfg.points;
    for (const auto& p : point_args) points.push_back(parse_point(p));
    const double g_err = has_tabulated_profile(cfg.map) ? s.line.tolerance : 0.0;
    out << "map: " << describe(cfg.map) << "\n";
    for (const auto& p : points)
        out << "g(" << calabi::detail::num(p.x()) << ", " << calabi::detail::num(p.y())
            << ") = " << pm(action_function(cfg.map, cfg.context, p, s.line), g_err) << "\n";
    const ActionValue cal = calabi(cfg.map, cfg.context, s);
    out << "calabi: " << pm(cal.value, cal.error_estimate) << "\n";
    for (const auto& nm : cfg.measures) {
        const ActionValue a = measure_action(cfg.map, cfg.context, nm.spec, s);
        out << "action[" << nm.name << "]: " << pm(a.value, a.error_estimate) << "\n";
    }
    return kExitOk;
}

inline int cmd_rotation(const ExperimentConfig& cfg, std::ostream& out) {
    using calabi::detail::pm;
    const auto& s = cfg.verify.action;
    out << "map: " << describe(cfg.map) << "\n";
    for (const auto& nm : cfg.measures) {
        const RotationValue r = measure_rotation(cfg.map, nm.spec, s);
        out << "rotation[" << nm.name << "]: " << pm(r.value, r.error_estimate) << (r.exact ? " (exact)" : "") << "\n";
    }
    const BoundaryIdentity id = boundary_identity(cfg.map, s);
    const double err = id.rho_area.error_estimate + id.action_lower.error_estimate + id.action_upper.error_estimate +
                       id.rho_upper.error_estimate;
    out << "boundary identity: rho(area) = " << pm(id.rho_area.value, id.rho_area.error_estimate)
        << ", A(lower) - A(upper) + rho(upper) = " << pm(id.rhs(), err - id.rho_area.error_estimate)
        << ", defect " << pm(id.defect(), err) << "\n";
    return kExitOk;
}

inline int cmd_orbits(const ExperimentConfig& cfg, int q, std::optional<std::int64_t> p, std::optional<int> grid,
                      std::ostream& out) {
    using calabi::detail::num;
    const auto& s = cfg.verify;
    const std::vector<std::int64_t> windings = p ? std::vector<std::int64_t>{*p} : candidate_windings(cfg.map, q, s.action);
    std::vector<PeriodicOrbit> all;
    out << "map: " << describe(cfg.map) << "\nq = " << q << ", windings:";
    for (auto w : windings) out << " " << w;
    out << "\n";
    for (auto w : windings) {
        auto found = find_periodic_orbits(cfg.map, q, w, s.search, grid.value_or(s.search.grid));
        out << "p = " << w << ": " << found.size() << " orbits\n";
        for (const auto& o : found) {
            const auto& z = o.points.front();
            out << "  start (" << num(z.frac) << ", " << num(z.y) << ") residual " << num(o.residual) << " least period "
                << o.least_period << (o.degenerate ? " degenerate" : "") << " action "
                << calabi::detail::pm(o.action, orbit_action_error(cfg.map, o, s.action)) << "\n";
        }
        all.insert(all.end(), found.begin(), found.end());
    }
    if (all.empty()) out << "census empty\n";
    write_file(cfg.output.orbits_csv, [&](std::ostream& f) { write_orbits_csv(f, all); });
    write_file(cfg.output.plot_csv,
               [&](std::ostream& f) { write_plot_csv(f, cfg.map, all, cfg.plot.samples, cfg.plot.iterations); });
    return kExitOk;
}

inline int cmd_verify(const ExperimentConfig& cfg, std::optional<int> q_max, std::ostream& out) {
    const MeasureSpec& mu1 = cfg.measure(cfg.mu1);
    const MeasureSpec& mu2 = cfg.measure(cfg.mu2);
    int qm = 0;
    if (q_max)
        qm = *q_max;
    else if (cfg.q_max)
        qm = *cfg.q_max;
    else
        qm = q_threshold(action_gap(cfg.map, mu1, mu2, cfg.verify.action).gap) + 2;
    const VerificationReport rep = verify_theorem(cfg.map, mu1, mu2, qm, cfg.verify);
    emit_verification(cfg, cfg.map, rep, out);
    return verdict_exit(rep);
}

struct LocalPerturbationArgs {
    double a = 0.6180339887;
    double cx = 0.5, cy = 0.5;
    double radius = 0.35;
    double c = 50.8;
    int extra = 2;
};

inline int cmd_local_perturbation(const ExperimentConfig& cfg, const LocalPerturbationArgs& e, std::ostream& out) {
    using calabi::detail::pm;
    const LocalPerturbationReport rep =
        example_local_perturbation(e.a, AnnulusPoint(e.cx, e.cy), e.radius, e.c, cfg.verify, e.extra);
    const MapExpr m = MapExpr::compose(MapExpr::rigid(e.a), MapExpr::local_disk_twist(AnnulusPoint(e.cx, e.cy), e.radius,
                                                                                       RadialProfile{e.c}));
    out << "calabi(f o h): " << pm(rep.calabi_perturbed, rep.calabi_error) << "\n";
    out << "calabi(h): " << pm(rep.calabi_bump, rep.calabi_error) << "\n";
    out << "additivity defect: " << pm(rep.additivity_defect, rep.calabi_error) << "\n";
    out << "boundary actions: lower " << pm(rep.lower_action.value, rep.lower_action.error_estimate) << ", upper "
        << pm(rep.upper_action.value, rep.upper_action.error_estimate) << "\n\n";
    emit_verification(cfg, m, rep.verification, out);
    return verdict_exit(rep.verification);
}

inline int cmd_audit(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& out) {
    using calabi::detail::num;
    const auto& s = cfg.verify.action;
    const MapExpr& m = cfg.map;
    bool ok = true;
    auto line = [&](const std::string& name, double value, double limit) {
        const bool pass = value < limit;
        ok = ok && pass;
        out << (pass ? "ok   " : "FAIL ") << name << ": " << num(value) << " (limit " << num(limit) << ")\n";
    };
    out << "map: " << describe(m) << "\n";
    line("area defect, 64x64 grid", area_defect(m, 64), 1e-9);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const AnnulusPoint p(u(rng), u(rng));
        const std::array<double, 2> w{u(rng), u(rng)};
        const PolylinePath dogleg({{cfg.context.base.x(), cfg.context.base.y()}, w, {p.x(), p.y()}});
        worst = std::max(worst, path_independence_defect(m, cfg.context, p, dogleg, s.line));
    }
    line("path independence, 20 dog-legs", worst, 1e-8);

    line("additivity with rigid(0.3)", additivity_defect(m, MapExpr::rigid(0.3), cfg.context, s), 1e-8);
    line("additivity with itself", additivity_defect(m, m, cfg.context, s), 1e-8);

    const auto lower = MeasureSpec::boundary_lower(), upper = MeasureSpec::boundary_upper();
    const double r0 = measure_rotation(m, lower, s).value, r1 = measure_rotation(m, upper, s).value;
    double shift_worst = 0.0;
    for (double c : {-1.0, -0.3, 0.7, 2.0}) {
        const ShiftedDifference d = shifted_action_difference(m, upper, lower, c, s);
        shift_worst = std::max(shift_worst, std::abs(d.shifted_diff - d.base_diff - c * (r1 - r0)));
    }
    line("beta shift law on the boundary pair", shift_worst, 1e-6);
    return ok ? kExitOk : kExitFail;
}

}  // namespace detail

/// Parses argv and runs one subcommand; all output goes to `out` / `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Action, Calabi invariant, rotation number and periodic-orbit tools for annulus maps"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool outputs) {
        sub->add_option("--config", common.config, "experiment config (JSON, schema_version 1)");
        sub->add_option("--map", common.map, "short map spec, e.g. 'rigid:a=0.618*disk:x=0.5,y=0.5,R=0.35,c=50.8'");
        sub->add_option("--workers", common.workers, "worker threads (default: CALABI_WORKERS or hardware)")
            ->check(CLI::NonNegativeNumber);
        if (outputs) {
            sub->add_option("--report", common.report, "write the text report here");
            sub->add_option("--json", common.json, "write the JSON report here");
            sub->add_option("--orbits-csv", common.orbits_csv, "write orbit points as CSV");
            sub->add_option("--plot-csv", common.plot_csv, "write plot data as CSV");
        }
    };

    auto* action = app.add_subcommand("action", "action function values, Calabi invariant, measure actions");
    add_common(action, false);
    std::vector<std::string> points;
    action->add_option("--point", points, "x,y (repeatable)");

    auto* rotation = app.add_subcommand("rotation", "rotation numbers and the boundary identity");
    add_common(rotation, false);

    auto* orbits = app.add_subcommand("orbits", "periodic orbit census for (q, p) or the candidate window");
    add_common(orbits, true);
    int q = 1;
    std::optional<std::int64_t> p;
    std::optional<int> grid;
    orbits->add_option("--q", q, "period")->required()->check(CLI::PositiveNumber);
    orbits->add_option("--p", p, "winding (default: candidate window)");
    orbits->add_option("--grid", grid, "seed lattice density")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "run the period-threshold verification");
    add_common(verify, true);
    std::optional<int> q_max;
    std::string mu1, mu2;
    verify->add_option("--q-max", q_max, "largest period (default: threshold + 2)")->check(CLI::PositiveNumber);
    verify->add_option("--mu1", mu1, "first measure name");
    verify->add_option("--mu2", mu2, "second measure name");

    auto* ex = app.add_subcommand("example41", "rigid rotation composed with a local disk twist");
    add_common(ex, true);
    detail::LocalPerturbationArgs e;
    ex->add_option("--a", e.a, "rotation (turns)");
    ex->add_option("--cx", e.cx, "disk center x");
    ex->add_option("--cy", e.cy, "disk center y");
    ex->add_option("--R", e.radius, "disk radius");
    ex->add_option("--c", e.c, "twist amplitude (radians)");
    ex->add_option("--extra", e.extra, "periods beyond the threshold")->check(CLI::NonNegativeNumber);

    auto* audit = app.add_subcommand("audit", "area preservation, path independence, additivity, beta-shift law");
    add_common(audit, false);
    std::uint64_t seed = 1;
    audit->add_option("--seed", seed, "seed for random dog-leg paths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (common.workers > 0) set_worker_count(common.workers);
        if (ex->parsed()) {
            ExperimentConfig cfg;
            if (!common.config.empty() || !common.map.empty()) cfg = detail::load(common);
            if (!common.report.empty()) cfg.output.report = common.report;
            if (!common.json.empty()) cfg.output.json = common.json;
            if (!common.orbits_csv.empty()) cfg.output.orbits_csv = common.orbits_csv;
            if (!common.plot_csv.empty()) cfg.output.plot_csv = common.plot_csv;
            return detail::cmd_local_perturbation(cfg, e, out);
        }
        ExperimentConfig cfg = detail::load(common);
        if (action->parsed()) return detail::cmd_action(cfg, points, out);
        if (rotation->parsed()) return detail::cmd_rotation(cfg, out);
        if (orbits->parsed()) return detail::cmd_orbits(cfg, q, p, grid, out);
        if (audit->parsed()) return detail::cmd_audit(cfg, seed, out);
        if (!mu1.empty()) cfg.mu1 = mu1;
        if (!mu2.empty()) cfg.mu2 = mu2;
        return detail::cmd_verify(cfg, q_max, out);
    } catch (const ConfigError& ce) {
        err << "config error: " << ce.what() << "\n";
        return kExitUsage;
    } catch (const DegenerateGap& dg) {
        err << dg.what() << "\n";
        return kExitInconclusive;
    } catch (const NonConvergent& nc) {
        err << nc.what() << "\n";
        return kExitInconclusive;
    } catch (const std::invalid_argument& ia) {
        err << "usage error: " << ia.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace calabi::cli
