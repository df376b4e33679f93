#pragma once

// Action functions g with dg = f*beta - beta, the Calabi invariant (mean of g
// over the area measure), actions of invariant measures, and the behaviour of
// action differences when beta is shifted by a closed form c dx.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include "calabi/maps.hpp"
#include "calabi/periodic_orbit.hpp"
#include "calabi/quadrature.hpp"

namespace calabi {

/// Primitive of omega plus the base point where g vanishes. The default base
/// point (0, 0) sits on the lower boundary, where every built-in map has g = 0.
struct ActionContext {
    OneForm beta = OneForm::canonical();
    AnnulusPoint base{0.0, 0.0};

    static ActionContext canonical() { return {}; }
    static ActionContext shifted(double c) { return {OneForm::shifted(c), AnnulusPoint{0.0, 0.0}}; }
};

struct ActionValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

struct BoundaryLower {};
struct BoundaryUpper {};
struct AreaMeasure {};
struct OrbitMeasure {
    PeriodicOrbit orbit;
};
struct EmpiricalMeasure {
    AnnulusPoint seed;
    long n_iter = 1'000'000;
};

/// An invariant probability measure described by how it is sampled.
class MeasureSpec {
public:
    using Variant = std::variant<BoundaryLower, BoundaryUpper, AreaMeasure, OrbitMeasure, EmpiricalMeasure>;

    static MeasureSpec boundary_lower() { return MeasureSpec(BoundaryLower{}); }
    static MeasureSpec boundary_upper() { return MeasureSpec(BoundaryUpper{}); }
    static MeasureSpec area() { return MeasureSpec(AreaMeasure{}); }
    static MeasureSpec orbit(PeriodicOrbit o) {
        if (!o.certified())
            throw std::invalid_argument("orbit measure: orbit residual " + format_real(o.residual) +
                                        " is not certified");
        return MeasureSpec(OrbitMeasure{std::move(o)});
    }
    static MeasureSpec empirical(AnnulusPoint seed, long n_iter) {
        if (n_iter < 1000) throw std::invalid_argument("empirical measure: n_iter must be >= 1000");
        return MeasureSpec(EmpiricalMeasure{seed, n_iter});
    }

    const Variant& variant() const { return v_; }

    std::string describe() const {
        return std::visit(overloaded{
                              [](const BoundaryLower&) -> std::string { return "boundary_lower"; },
                              [](const BoundaryUpper&) -> std::string { return "boundary_upper"; },
                              [](const AreaMeasure&) -> std::string { return "area"; },
                              [](const OrbitMeasure& o) -> std::string {
                                  return "orbit(q=" + std::to_string(o.orbit.q) + ",p=" + std::to_string(o.orbit.p) + ")";
                              },
                              [](const EmpiricalMeasure& e) -> std::string {
                                  std::ostringstream os;
                                  os.precision(17);
                                  os << "empirical(seed=(" << e.seed.x() << "," << e.seed.y() << "),n=" << e.n_iter << ")";
                                  return os.str();
                              },
                          },
                          v_);
    }

private:
    explicit MeasureSpec(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

/// Birkhoff averages: partial means at n/2, 3n/4 and n; the error estimate is
/// their largest deviation from the final mean.
struct BirkhoffConfig {
    long n_iter = 1'000'000;
    double tolerance = 1e-6;
};

struct ActionSettings {
    QuadratureSpec2D area{};
    BirkhoffConfig birkhoff{};
    QuadratureSpec line{};
};

namespace detail {

/// Leaf action functions before normalization, for beta = y dx.
///   rigid: 0;  twist: G(y) = int_0^y s phi'(s) ds;
///   disk:  g0(r) + S o f - S, with g0 the radial action for -r^2/2 dtheta and
///          S = y_c u + u v / 2 (so that y dx = -r^2/2 dtheta + dS).
inline double disk_raw_action(const LocalDiskTwist& d, const LiftedPoint& p) {
    const auto [u, v] = disk_chart(d, p);
    const double r = std::hypot(u, v);
    if (r >= d.radius) return 0.0;
    const double phi = d.profile.value(r, d.radius);
    const double cs = std::cos(phi), sn = std::sin(phi);
    const double u2 = cs * u - sn * v, v2 = sn * u + cs * v;
    const double yc = d.center.y();
    return d.profile.radial_action(r, d.radius) + (yc * u2 + 0.5 * u2 * v2) - (yc * u + 0.5 * u * v);
}

/// Unnormalized canonical-beta action via the closed forms; compositions
/// combine as g(outer o inner) = g_outer o inner + g_inner.
inline double raw_closed_form(const MapExpr& m, const LiftedPoint& p) {
    return std::visit(overloaded{
                          [&](const RigidRotation&) { return 0.0; },
                          [&](const Twist& t) { return *t.profile.action_primitive(p.y); },
                          [&](const LocalDiskTwist& d) { return disk_raw_action(d, p); },
                          [&](const Compose& c) {
                              return raw_closed_form(c.outer, eval_lift(c.inner, p)) + raw_closed_form(c.inner, p);
                          },
                          [&](const Iterate& it) {
                              double total = 0.0;
                              LiftedPoint q = p;
                              for (int j = 0; j < it.k; ++j) {
                                  total += raw_closed_form(it.base, q);
                                  q = eval_lift(it.base, q);
                              }
                              return total;
                          },
                      },
                      m.node().v);
}

inline double closed_form_action(const MapExpr& m, const LiftedPoint& p, const LiftedPoint& x0) {
    return raw_closed_form(m, p) - raw_closed_form(m, x0);
}

}  // namespace detail

/// Integral of f*beta - beta along a path in the cover.
inline double pullback_line_integral(const MapExpr& m, const OneForm& beta, const PolylinePath& path,
                                     const QuadratureSpec& quad = {}) {
    return integrate_along(
        path,
        [&](double x, double y, double dx, double dy) {
            const auto [img, jac] = eval_with_differential(m, LiftedPoint::from_real(x, y));
            const auto [tx, ty] = jac.apply(dx, dy);
            const auto [a1, b1] = beta.coefficients(img.x(), img.y);
            const auto [a0, b0] = beta.coefficients(x, y);
            return a1 * tx + b1 * ty - (a0 * dx + b0 * dy);
        },
        quad, [&](double x, double y) { return region_signature(m, LiftedPoint::from_real(x, y)); });
}

/// g(p) by integrating f*beta - beta along the straight lifted segment from
/// the base point to p (both on sheet 0).
inline double action_function_by_path(const MapExpr& m, const ActionContext& ctx, const AnnulusPoint& p,
                                      const QuadratureSpec& quad = {}) {
    if (p == ctx.base) return 0.0;
    return pullback_line_integral(m, ctx.beta, PolylinePath::segment(lift(ctx.base, 0), lift(p, 0)), quad);
}

/// The action function g with dg = f*beta - beta.
///
/// Closed forms are used whenever every profile is analytic and beta is
/// y dx or y dx + c dx. Shifting beta by c dx adds c (D(p) - D(x0)) where D is
/// the one-step lift displacement. Maps containing tabulated profiles, and
/// explicit 1-forms, fall back to the line integral from the base point.
inline double action_function(const MapExpr& m, const ActionContext& ctx, const LiftedPoint& p,
                              const QuadratureSpec& quad = {}) {
    const auto shift = ctx.beta.shift();
    if (!shift || has_tabulated_profile(m)) return action_function_by_path(m, ctx, project(p).point, quad);
    const LiftedPoint x0 = lift(ctx.base, 0);
    const LiftedPoint q{0, p.frac, p.y};
    double g = detail::closed_form_action(m, q, x0);
    if (*shift != 0.0) g += *shift * (displacement(m, q) - displacement(m, x0));
    return g;
}

inline double action_function(const MapExpr& m, const ActionContext& ctx, const AnnulusPoint& p,
                              const QuadratureSpec& quad = {}) {
    return action_function(m, ctx, lift(p, 0), quad);
}

/// |g along the straight path - g along `alternate`|; `alternate` must run
/// from the base point to p on sheet 0.
inline double path_independence_defect(const MapExpr& m, const ActionContext& ctx, const AnnulusPoint& p,
                                       const PolylinePath& alternate, const QuadratureSpec& quad = {}) {
    const auto& v = alternate.vertices();
    auto near = [](const std::array<double, 2>& a, double x, double y) {
        return std::abs(a[0] - x) < 1e-12 && std::abs(a[1] - y) < 1e-12;
    };
    if (!near(v.front(), ctx.base.x(), ctx.base.y()) || !near(v.back(), p.x(), p.y()))
        throw std::invalid_argument("path_independence_defect: path must run from the base point to p on sheet 0");
    const double straight = action_function_by_path(m, ctx, p, quad);
    return std::abs(straight - pullback_line_integral(m, ctx.beta, alternate, quad));
}

/// Mean of an observable with respect to an invariant measure.
///
/// Area: tensor Gauss quadrature. Orbit: exact finite average. Boundary and
/// empirical: Birkhoff averages along the orbit of (0, y_b) or the seed;
/// NonConvergent when the tail deviation exceeds the configured tolerance.
template <class Observable>
ActionValue measure_average(const MapExpr& m, const MeasureSpec& mu, Observable&& obs, const ActionSettings& s = {}) {
    auto birkhoff = [&](LiftedPoint z, long n) -> ActionValue {
        CompensatedSum sum;
        const long half = n / 2, three_quarter = (3 * n) / 4;
        double a_half = 0.0, a_tq = 0.0;
        for (long j = 1; j <= n; ++j) {
            sum.add(obs(z));
            z = eval_lift(m, z);
            z.sheet = 0;
            if (j == half) a_half = sum.value() / static_cast<double>(j);
            if (j == three_quarter) a_tq = sum.value() / static_cast<double>(j);
        }
        const double mean = sum.value() / static_cast<double>(n);
        const double err = std::max(std::abs(mean - a_half), std::abs(mean - a_tq));
        if (err > s.birkhoff.tolerance)
            throw NonConvergent("Birkhoff average tail deviation " + format_real(err) + " exceeds " +
                                format_real(s.birkhoff.tolerance) + " after " + std::to_string(n) + " iterates");
        return {mean, err};
    };
    return std::visit(
        overloaded{
            [&](const BoundaryLower&) { return birkhoff(LiftedPoint{0, 0.0, 0.0}, s.birkhoff.n_iter); },
            [&](const BoundaryUpper&) { return birkhoff(LiftedPoint{0, 0.0, 1.0}, s.birkhoff.n_iter); },
            [&](const AreaMeasure&) {
                const Estimate e = integrate_unit_square(
                    [&](double x, double y) { return obs(LiftedPoint{0, x, y}); }, s.area);
                return ActionValue{e.value, e.error};
            },
            [&](const OrbitMeasure& o) {
                double total = 0.0;
                for (const auto& pt : o.orbit.points) total += obs(LiftedPoint{0, pt.frac, pt.y});
                return ActionValue{total / static_cast<double>(o.orbit.points.size()), 0.0};
            },
            [&](const EmpiricalMeasure& e) { return birkhoff(lift(e.seed, 0), e.n_iter); },
        },
        mu.variant());
}

/// A(mu) = integral of g d(mu).
inline ActionValue measure_action(const MapExpr& m, const ActionContext& ctx, const MeasureSpec& mu,
                                  const ActionSettings& s = {}) {
    return measure_average(m, mu, [&](const LiftedPoint& p) { return action_function(m, ctx, p, s.line); }, s);
}

/// Calabi invariant: the action of the area measure (total area 1).
inline ActionValue calabi(const MapExpr& m, const ActionContext& ctx = {}, const ActionSettings& s = {}) {
    return measure_action(m, ctx, MeasureSpec::area(), s);
}

/// Calabi invariant of a single local disk twist computed in its polar chart:
/// 2 pi int_0^R r g0(r) dr. The cohomologous term S o f - S integrates to zero
/// and is dropped. Valid when the base point lies outside the disk.
inline ActionValue calabi_polar(const LocalDiskTwist& d) {
    const Estimate e = integrate_interval(
        [&](double r) { return 2.0 * std::numbers::pi * r * d.profile.radial_action(r, d.radius); }, 0.0, d.radius,
        1e-14);
    return {e.value, e.error};
}

/// Mean action of h(r, theta) = (r, theta + phi(r)) on the unit disk with the
/// normalized form (1/pi) r dr dtheta and primitive (1/2pi) r^2 dtheta:
///   (1/pi) int_0^1 r int_1^r s^2 phi'(s) ds dr,
/// evaluated by nested quadrature. Positive when phi' <= 0.
inline ActionValue disk_mean_action(const RadialProfile& profile) {
    auto inner = [&](double r) {
        return integrate_interval([&](double s) { return s * s * profile.derivative(s, 1.0); }, 1.0, r, 1e-14).value;
    };
    const Estimate outer = integrate_interval([&](double r) { return r * inner(r); }, 0.0, 1.0, 1e-13);
    return {outer.value / std::numbers::pi, outer.error / std::numbers::pi};
}

/// |A(m2 o m1) - A(m1) - A(m2)| for Calabi invariants. Composition actions
/// follow g12 = g2 o f1 + g1, which is the base-point condition
/// g12(x0) = g1(x0) + g2(f1(x0)) under which the mean action is additive.
inline double additivity_defect(const MapExpr& m1, const MapExpr& m2, const ActionContext& ctx = {},
                                const ActionSettings& s = {}) {
    const double a12 = calabi(MapExpr::compose(m2, m1), ctx, s).value;
    return std::abs(a12 - calabi(m1, ctx, s).value - calabi(m2, ctx, s).value);
}

struct ShiftedDifference {
    double base_diff = 0.0;     // A(mu1) - A(mu2) with y dx
    double shifted_diff = 0.0;  // the same with y dx + c dx
    double error_estimate = 0.0;
};

inline ShiftedDifference shifted_action_difference(const MapExpr& m, const MeasureSpec& mu1, const MeasureSpec& mu2,
                                                   double c, const ActionSettings& s = {}) {
    const auto base = ActionContext::canonical();
    const auto shifted = ActionContext::shifted(c);
    const ActionValue b1 = measure_action(m, base, mu1, s), b2 = measure_action(m, base, mu2, s);
    const ActionValue s1 = measure_action(m, shifted, mu1, s), s2 = measure_action(m, shifted, mu2, s);
    return {b1.value - b2.value, s1.value - s2.value,
            b1.error_estimate + b2.error_estimate + s1.error_estimate + s2.error_estimate};
}

}  // namespace calabi
