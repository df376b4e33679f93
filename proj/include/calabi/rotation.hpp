#pragma once

// Rotation numbers (turns per iterate) of points, boundary circles and
// invariant measures, and the boundary identity
//   rho(area) = A(mu_lower) - A(mu_upper) + rho_upper      (beta = y dx).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include "calabi/action.hpp"
#include "calabi/maps.hpp"

namespace calabi {

struct RotationValue {
    double value = 0.0;
    double error_estimate = 0.0;
    bool exact = false;      // closed form or orbit winding; then error_estimate == 0
    bool converged = true;   // tail deviation within tolerance
};

namespace detail {
/// Average of the one-step displacement along an orbit, with the partial
/// means at n/2 and 3n/4 providing the error estimate.
template <class Step>
RotationValue displacement_average(Step&& step, long n_iter, double tolerance) {
    CompensatedSum sum;
    const long half = n_iter / 2, three_quarter = (3 * n_iter) / 4;
    double a_half = 0.0, a_tq = 0.0;
    for (long j = 1; j <= n_iter; ++j) {
        sum.add(step());
        if (j == half) a_half = sum.value() / static_cast<double>(j);
        if (j == three_quarter) a_tq = sum.value() / static_cast<double>(j);
    }
    const double mean = sum.value() / static_cast<double>(n_iter);
    const double err = std::max(std::abs(mean - a_half), std::abs(mean - a_tq));
    return {mean, err, false, err <= tolerance};
}
}  // namespace detail

/// Rotation number of the orbit of p. Rigid rotations and twists use their
/// closed forms; everything else averages the lift displacement. A tail
/// deviation above `tolerance` is reported through `converged`, not thrown.
inline RotationValue rotation_number_point(const MapExpr& m, const AnnulusPoint& p, long n_iter = 100'000,
                                           double tolerance = 1e-6) {
    if (n_iter < 1000) throw std::invalid_argument("rotation_number_point: n_iter must be >= 1000");
    if (auto* r = std::get_if<RigidRotation>(&m.node().v)) return {r->a, 0.0, true, true};
    if (auto* t = std::get_if<Twist>(&m.node().v)) return {t->profile.value(p.y()), 0.0, true, true};
    LiftedPoint z = lift(p, 0);
    return detail::displacement_average(
        [&] {
            const LiftedPoint next = eval_lift(m, z);
            const double d = lifted_dx(next, z);
            z = {0, next.frac, next.y};
            return d;
        },
        n_iter, tolerance);
}

/// Poincare rotation number of a lifted circle map by displacement averaging
/// from x = 0. Converges like O(1/n) for any circle homeomorphism.
inline RotationValue circle_rotation_number(const CircleMap& f, long n_iter = 100'000) {
    double frac = 0.0;
    RotationValue v = detail::displacement_average(
        [&] {
            const double d = f.displacement(frac);
            frac = normalize_turns(frac + d);
            return d;
        },
        n_iter, std::numeric_limits<double>::infinity());
    v.converged = true;
    return v;
}

/// Rotation number of a boundary circle. Exact when the restriction is a
/// rigid rotation (true for every built-in map); otherwise averaged.
inline RotationValue boundary_rotation_number(const MapExpr& m, Boundary which, long n_iter = 100'000) {
    const CircleMap f = boundary_circle_map(m, which);
    if (auto shift = f.rigid_shift()) return {*shift, 0.0, true, true};
    return circle_rotation_number(f, n_iter);
}

/// Rotation number of an invariant measure. The area measure uses the mean of
/// the one-step displacement (valid by invariance of the area).
inline RotationValue measure_rotation(const MapExpr& m, const MeasureSpec& mu, const ActionSettings& s = {}) {
    return std::visit(
        overloaded{
            [&](const BoundaryLower&) { return boundary_rotation_number(m, Boundary::lower, s.birkhoff.n_iter); },
            [&](const BoundaryUpper&) { return boundary_rotation_number(m, Boundary::upper, s.birkhoff.n_iter); },
            [&](const AreaMeasure&) {
                const Estimate e = integrate_unit_square(
                    [&](double x, double y) { return displacement(m, LiftedPoint{0, x, y}); }, s.area);
                return RotationValue{e.value, e.error, false, true};
            },
            [&](const OrbitMeasure& o) {
                return RotationValue{static_cast<double>(o.orbit.p) / o.orbit.q, 0.0, true, true};
            },
            [&](const EmpiricalMeasure& e) {
                RotationValue v = rotation_number_point(m, e.seed, e.n_iter, s.birkhoff.tolerance);
                if (!v.converged)
                    throw NonConvergent("empirical rotation number tail deviation " + format_real(v.error_estimate));
                return v;
            },
        },
        mu.variant());
}

struct BoundaryIdentity {
    RotationValue rho_area;
    ActionValue action_lower;
    ActionValue action_upper;
    RotationValue rho_upper;

    double rhs() const { return action_lower.value - action_upper.value + rho_upper.value; }
    double defect() const { return std::abs(rho_area.value - rhs()); }
};

/// All four terms of rho(area) = A(lower) - A(upper) + rho(upper) for y dx.
inline BoundaryIdentity boundary_identity(const MapExpr& m, const ActionSettings& s = {}) {
    const auto ctx = ActionContext::canonical();
    return {measure_rotation(m, MeasureSpec::area(), s), measure_action(m, ctx, MeasureSpec::boundary_lower(), s),
            measure_action(m, ctx, MeasureSpec::boundary_upper(), s),
            boundary_rotation_number(m, Boundary::upper, s.birkhoff.n_iter)};
}

inline double lemma_boundary_identity_defect(const MapExpr& m, const ActionSettings& s = {}) {
    return boundary_identity(m, s).defect();
}

}  // namespace calabi
