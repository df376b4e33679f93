#pragma once

// Report rendering: a text summary and a JSON document with the same content,
// plus CSV exports. Column orders are frozen:
//   orbits CSV: orbit_id,j,x,y,x_tilde,q,p,residual,action
//   plot CSV:   kind,id,q,j,x,y        (kind = orbit | portrait)
// Every real quantity is written with its error estimate.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "calabi/action.hpp"
#include "calabi/harness.hpp"
#include "calabi/maps.hpp"

namespace calabi {

/// Error bar for an orbit's mean action: the displacement of the true orbit
/// (residual / sigma_min, the latter floored at 1e-6) times the largest
/// gradient of g along the orbit.
inline double orbit_action_error(const MapExpr& m, const PeriodicOrbit& o, const ActionSettings& s = {}) {
    const auto ctx = ActionContext::canonical();
    constexpr double h = 1e-6;
    double grad = 0.0;
    for (const auto& pt : o.points) {
        const double y0 = std::clamp(pt.y, h, 1.0 - h);
        const LiftedPoint c{0, pt.frac, y0};
        const double gx = (action_function(m, ctx, c.translated(h), s.line) -
                           action_function(m, ctx, c.translated(-h), s.line)) / (2 * h);
        const double gy = (action_function(m, ctx, LiftedPoint{0, pt.frac, y0 + h}, s.line) -
                           action_function(m, ctx, LiftedPoint{0, pt.frac, y0 - h}, s.line)) / (2 * h);
        grad = std::max(grad, std::hypot(gx, gy));
    }
    const double shift = o.residual / std::max(o.min_singular_value, 1e-6);
    return grad * std::min(shift, 1.0) + 1e-15;
}

namespace detail {

inline std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

inline std::string pm(double v, double e) { return num(v) + " +- " + num(e); }

inline nlohmann::ordered_json value_json(double v, double e) { return {{"value", v}, {"error", e}}; }

}  // namespace detail

inline nlohmann::ordered_json orbit_json(const MapExpr& m, const PeriodicOrbit& o, bool in_bracket,
                                         const ActionSettings& s = {}) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : o.points) pts.push_back({p.frac, p.y, p.x()});
    return {{"q", o.q},
            {"p", o.p},
            {"least_period", o.least_period},
            {"residual", o.residual},
            {"certified", o.certified()},
            {"degenerate", o.degenerate},
            {"min_singular_value", o.min_singular_value},
            {"action", detail::value_json(o.action, orbit_action_error(m, o, s))},
            {"in_action_bracket", in_bracket},
            {"points", pts}};
}

inline nlohmann::ordered_json report_json(const MapExpr& m, const VerificationReport& r, const nlohmann::ordered_json& map,
                                          const ActionSettings& s = {}) {
    auto measure = [](const MeasureSummary& ms) {
        return nlohmann::ordered_json{{"name", ms.name},
                                      {"action", detail::value_json(ms.action.value, ms.action.error_estimate)},
                                      {"rotation", detail::value_json(ms.rotation.value, ms.rotation.error_estimate)}};
    };
    nlohmann::ordered_json periods = nlohmann::ordered_json::array();
    for (const auto& pr : r.periods) {
        nlohmann::ordered_json counts = nlohmann::ordered_json::array();
        for (const auto& c : pr.counts) counts.push_back({{"p", c.p}, {"orbits", c.orbits}, {"max_residual", c.max_residual}});
        nlohmann::ordered_json orbits = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < pr.orbits.size(); ++i) orbits.push_back(orbit_json(m, pr.orbits[i], pr.in_bracket[i], s));
        periods.push_back({{"q", pr.q},
                           {"prime", pr.prime},
                           {"verdict", to_string(pr.verdict)},
                           {"note", pr.note},
                           {"windings", pr.windings},
                           {"grid", pr.grid_used},
                           {"qualifying_orbits", pr.qualifying},
                           {"per_winding", counts},
                           {"orbits", orbits}});
    }
    return {{"schema_version", 1},
            {"map", map},
            {"map_description", r.map},
            {"mu1", measure(r.mu1)},
            {"mu2", measure(r.mu2)},
            {"gap", detail::value_json(r.gap.gap, r.gap.error)},
            {"q_threshold", r.q_threshold},
            {"q_max", r.q_max},
            {"action_bracket", {r.bracket_lo, r.bracket_hi}},
            {"periods", periods}};
}

inline void write_report_text(std::ostream& os, const MapExpr& m, const VerificationReport& r,
                              const ActionSettings& s = {}) {
    using detail::num;
    using detail::pm;
    os << "map: " << r.map << "\n";
    for (const auto* ms : {&r.mu1, &r.mu2})
        os << "measure " << ms->name << ": action " << pm(ms->action.value, ms->action.error_estimate) << ", rotation "
           << pm(ms->rotation.value, ms->rotation.error_estimate) << "\n";
    os << "gap: " << pm(r.gap.gap, r.gap.error) << "\n";
    os << "q_threshold: " << r.q_threshold << " (q_max " << r.q_max << ")\n";
    os << "action bracket: [" << num(r.bracket_lo) << ", " << num(r.bracket_hi) << "]\n";
    for (const auto& pr : r.periods) {
        os << "\nq = " << pr.q << (pr.prime ? " (prime)" : "") << ": " << to_string(pr.verdict);
        if (!pr.note.empty()) os << ", " << pr.note;
        os << "\n  windings:";
        for (auto p : pr.windings) os << " " << p;
        os << "\n  grid " << pr.grid_used << ", " << pr.orbits.size() << " distinct orbits, " << pr.qualifying
           << " qualifying\n";
        for (const auto& c : pr.counts)
            os << "  p = " << c.p << ": " << c.orbits << " orbits, max residual " << num(c.max_residual) << "\n";
        for (std::size_t i = 0; i < pr.orbits.size(); ++i) {
            const auto& o = pr.orbits[i];
            const auto& z = o.points.front();
            os << "  orbit " << i << ": p=" << o.p << " start (" << num(z.frac) << ", " << num(z.y) << ") residual "
               << num(o.residual) << " least period " << o.least_period << (o.degenerate ? " degenerate" : "")
               << " action " << pm(o.action, orbit_action_error(m, o, s))
               << (pr.in_bracket[i] ? "" : " [outside action bracket]") << "\n";
        }
    }
}

inline void write_orbits_csv(std::ostream& os, const std::vector<PeriodicOrbit>& orbits) {
    os << "orbit_id,j,x,y,x_tilde,q,p,residual,action\n";
    os << std::setprecision(17);
    for (std::size_t id = 0; id < orbits.size(); ++id) {
        const auto& o = orbits[id];
        for (std::size_t j = 0; j < o.points.size(); ++j) {
            const auto& z = o.points[j];
            os << id << "," << j << "," << z.frac << "," << z.y << "," << z.x() << "," << o.q << "," << o.p << ","
               << o.residual << "," << o.action << "\n";
        }
    }
}

/// Orbit points followed by phase-portrait samples: `samples` seeds on x = 0
/// with y spread over (0, 1), each iterated `iterations` times.
inline void write_plot_csv(std::ostream& os, const MapExpr& m, const std::vector<PeriodicOrbit>& orbits, int samples,
                           int iterations) {
    os << "kind,id,q,j,x,y\n";
    os << std::setprecision(17);
    for (std::size_t id = 0; id < orbits.size(); ++id)
        for (std::size_t j = 0; j < orbits[id].points.size(); ++j)
            os << "orbit," << id << "," << orbits[id].q << "," << j << "," << orbits[id].points[j].frac << ","
               << orbits[id].points[j].y << "\n";
    for (int i = 0; i < samples; ++i) {
        LiftedPoint z{0, 0.0, (i + 0.5) / samples};
        for (int j = 0; j <= iterations; ++j) {
            os << "portrait," << i << ",0," << j << "," << z.frac << "," << z.y << "\n";
            const LiftedPoint next = eval_lift(m, z);
            z = {0, next.frac, next.y};
        }
    }
}

inline std::vector<PeriodicOrbit> all_orbits(const VerificationReport& r) {
    std::vector<PeriodicOrbit> out;
    for (const auto& pr : r.periods) out.insert(out.end(), pr.orbits.begin(), pr.orbits.end());
    return out;
}

}  // namespace calabi
