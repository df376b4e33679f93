#pragma once

// Exact area-preserving, boundary-preserving maps of the annulus that are
// isotopic to the identity, each with its canonical lift to R x [0,1].
//
// The family is closed: rigid rotations, twists (x, y) -> (x + phi(y), y),
// compactly supported local disk twists, composition and iteration. Every
// member is area preserving in exact arithmetic.

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "calabi/phase_space.hpp"

namespace calabi {

/// Row-major 2x2 matrix acting on (dx, dy).
struct Matrix2 {
    double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;

    static Matrix2 identity() { return {}; }
    double det() const { return m00 * m11 - m01 * m10; }

    friend Matrix2 operator*(const Matrix2& a, const Matrix2& b) {
        return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
                a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
    }
    std::array<double, 2> apply(double dx, double dy) const { return {m00 * dx + m01 * dy, m10 * dx + m11 * dy}; }

    /// Singular values (largest first), closed form for 2x2.
    std::array<double, 2> singular_values() const {
        const double s1 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
        const double d = std::abs(det());
        const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4.0 * d * d));
        const double big = std::sqrt(0.5 * (s1 + disc));
        return {big, big > 0.0 ? d / big : 0.0};
    }
};

// ---------------------------------------------------------------------------
// Profiles

/// phi(y) = slope * y.
struct LinearTwist {
    double slope = 1.0;
};
/// phi(y) = 16 c y^2 (1 - y)^2: zero with zero slope on both boundaries.
struct BumpTwist {
    double c = 1.0;
};
/// Natural-ish cubic B-spline through values on a uniform grid of [0, 1].
struct TabulatedTwist {
    std::vector<double> values;
    std::shared_ptr<const boost::math::interpolators::cardinal_cubic_b_spline<double>> spline;
};

class TwistProfile {
public:
    using Variant = std::variant<LinearTwist, BumpTwist, TabulatedTwist>;

    TwistProfile() : v_(LinearTwist{}) {}
    TwistProfile(LinearTwist t) : v_(t) {}
    TwistProfile(BumpTwist t) : v_(t) {}

    static TwistProfile linear(double slope = 1.0) { return TwistProfile(LinearTwist{slope}); }
    static TwistProfile bump(double c) { return TwistProfile(BumpTwist{c}); }
    static TwistProfile tabulated(std::vector<double> values) {
        if (values.size() < 4) throw std::invalid_argument("tabulated twist needs at least 4 values");
        const double h = 1.0 / static_cast<double>(values.size() - 1);
        auto sp = std::make_shared<const boost::math::interpolators::cardinal_cubic_b_spline<double>>(
            values.begin(), values.end(), 0.0, h);
        TwistProfile p;
        p.v_ = TabulatedTwist{std::move(values), std::move(sp)};
        return p;
    }

    const Variant& variant() const { return v_; }
    bool is_tabulated() const { return std::holds_alternative<TabulatedTwist>(v_); }

    double value(double y) const {
        if (auto* l = std::get_if<LinearTwist>(&v_)) return l->slope * y;
        if (auto* b = std::get_if<BumpTwist>(&v_)) {
            const double w = y * (1.0 - y);
            return 16.0 * b->c * w * w;
        }
        return (*std::get<TabulatedTwist>(v_).spline)(std::clamp(y, 0.0, 1.0));
    }

    /// phi'(y). Tabulated profiles use central differences with h = 1e-6
    /// (one-sided within h of the ends).
    double derivative(double y) const {
        if (auto* l = std::get_if<LinearTwist>(&v_)) return l->slope;
        if (auto* b = std::get_if<BumpTwist>(&v_)) return 32.0 * b->c * y * (1.0 - y) * (1.0 - 2.0 * y);
        constexpr double h = 1e-6;
        const double lo = std::max(0.0, y - h), hi = std::min(1.0, y + h);
        return (value(hi) - value(lo)) / (hi - lo);
    }

    /// G(y) = integral_0^y s phi'(s) ds in closed form, when available.
    std::optional<double> action_primitive(double y) const {
        if (auto* l = std::get_if<LinearTwist>(&v_)) return 0.5 * l->slope * y * y;
        if (auto* b = std::get_if<BumpTwist>(&v_)) {
            const double y2 = y * y, y3 = y2 * y;
            return 16.0 * b->c * y3 * (2.0 / 3.0 - 1.5 * y + 0.8 * y2);
        }
        return std::nullopt;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        if (auto* l = std::get_if<LinearTwist>(&v_))
            os << "linear(slope=" << l->slope << ")";
        else if (auto* b = std::get_if<BumpTwist>(&v_))
            os << "bump(c=" << b->c << ")";
        else
            os << "tabulated(n=" << std::get<TabulatedTwist>(v_).values.size() << ")";
        return os.str();
    }

private:
    Variant v_;
};

/// Radial rotation angle (radians) of a local disk twist of radius R:
/// phi(r) = c (1 - (r/R)^2)^2. phi(R) = 0 and phi'(R) = 0, but phi is not
/// flat to all orders at R.
struct RadialProfile {
    double c = 1.0;

    double value(double r, double R) const {
        const double t = r / R, w = 1.0 - t * t;
        return c * w * w;
    }
    double derivative(double r, double R) const {
        const double t = r / R;
        return -4.0 * c * t * (1.0 - t * t) / R;
    }
    /// -1/2 * integral_R^r s^2 phi'(s) ds: the radial part of the action
    /// function for the primitive -r^2/2 dtheta of dy ^ dx.
    double radial_action(double r, double R) const {
        const double t = r / R, t2 = t * t, t4 = t2 * t2;
        return -0.5 * c * R * R * (1.0 / 3.0 - t4 + (2.0 / 3.0) * t4 * t2);
    }
};

// ---------------------------------------------------------------------------
// Map expressions

class MapExpr;

struct RigidRotation {
    double a = 0.0;  // turns, taken in R (the lift is x -> x + a)
};
struct Twist {
    TwistProfile profile;
};
struct LocalDiskTwist {
    AnnulusPoint center;
    double radius = 0.1;
    RadialProfile profile;
};
struct Compose;
struct Iterate;

namespace detail {
struct MapNode;
}

class MapExpr {
public:
    static MapExpr rigid(double a);
    static MapExpr twist(TwistProfile profile);
    static MapExpr local_disk_twist(AnnulusPoint center, double radius, RadialProfile profile);
    /// outer o inner
    static MapExpr compose(MapExpr outer, MapExpr inner);
    static MapExpr iterate(MapExpr base, int k);

    const detail::MapNode& node() const { return *node_; }

private:
    explicit MapExpr(std::shared_ptr<const detail::MapNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::MapNode> node_;
};

struct Compose {
    MapExpr outer;
    MapExpr inner;
};
struct Iterate {
    MapExpr base;
    int k = 1;
};

namespace detail {
struct MapNode {
    std::variant<RigidRotation, Twist, LocalDiskTwist, Compose, Iterate> v;
};
}  // namespace detail

inline MapExpr MapExpr::rigid(double a) {
    if (!std::isfinite(a)) throw std::invalid_argument("rigid rotation: non-finite a");
    return MapExpr(std::make_shared<const detail::MapNode>(detail::MapNode{RigidRotation{a}}));
}
inline MapExpr MapExpr::twist(TwistProfile profile) {
    return MapExpr(std::make_shared<const detail::MapNode>(detail::MapNode{Twist{std::move(profile)}}));
}
inline MapExpr MapExpr::local_disk_twist(AnnulusPoint center, double radius, RadialProfile profile) {
    const double limit = std::min(center.y(), 1.0 - center.y());
    if (!(radius > 0.0) || !(radius < limit))
        throw std::invalid_argument("local disk twist: radius must lie in (0, " + format_real(limit) + ")");
    if (!std::isfinite(profile.c)) throw std::invalid_argument("local disk twist: non-finite amplitude");
    return MapExpr(std::make_shared<const detail::MapNode>(detail::MapNode{LocalDiskTwist{center, radius, profile}}));
}
inline MapExpr MapExpr::compose(MapExpr outer, MapExpr inner) {
    return MapExpr(
        std::make_shared<const detail::MapNode>(detail::MapNode{Compose{std::move(outer), std::move(inner)}}));
}
inline MapExpr MapExpr::iterate(MapExpr base, int k) {
    if (k < 1) throw std::invalid_argument("iterate: k must be positive");
    return MapExpr(std::make_shared<const detail::MapNode>(detail::MapNode{Iterate{std::move(base), k}}));
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

namespace detail {

/// Centered chart coordinates (u, v) of a lifted point relative to the
/// nearest copy of the disk center.
inline std::array<double, 2> disk_chart(const LocalDiskTwist& d, const LiftedPoint& p) {
    double u = p.frac - d.center.x();
    if (u > 0.5) u -= 1.0;
    if (u < -0.5) u += 1.0;
    return {u, p.y - d.center.y()};
}

// Mixes one inside/outside bit into a region signature. Points with equal
// signatures see the same smooth branch of every disk profile.
inline void mark_region(std::uint64_t* region, bool inside) {
    if (region) *region = *region * 0x9E3779B97F4A7C15ULL + (inside ? 2U : 1U);
}

inline LiftedPoint disk_apply(const LocalDiskTwist& d, const LiftedPoint& p, Matrix2* jac,
                              std::uint64_t* region = nullptr) {
    const auto [u, v] = disk_chart(d, p);
    const double r = std::hypot(u, v);
    mark_region(region, r < d.radius);
    if (r >= d.radius) {
        if (jac) *jac = Matrix2::identity();
        return p;
    }
    const double phi = d.profile.value(r, d.radius);
    const double cs = std::cos(phi), sn = std::sin(phi);
    const double u2 = cs * u - sn * v, v2 = sn * u + cs * v;
    if (jac) {
        // D = Rot(phi) + J Rot(phi) z (phi'(r) z / r)^T with J the quarter turn.
        const double g = r > 0.0 ? d.profile.derivative(r, d.radius) / r : 0.0;
        *jac = {cs - v2 * g * u, -sn - v2 * g * v, sn + u2 * g * u, cs + u2 * g * v};
    }
    LiftedPoint out = p.translated(u2 - u);
    out.y = d.center.y() + v2;
    return out;
}

inline LiftedPoint apply(const MapExpr& m, const LiftedPoint& p, Matrix2* jac, std::uint64_t* region = nullptr) {
    return std::visit(
        overloaded{
            [&](const RigidRotation& r) {
                if (jac) *jac = Matrix2::identity();
                return p.translated(r.a);
            },
            [&](const Twist& t) {
                if (jac) *jac = {1.0, t.profile.derivative(p.y), 0.0, 1.0};
                return p.translated(t.profile.value(p.y));
            },
            [&](const LocalDiskTwist& d) { return disk_apply(d, p, jac, region); },
            [&](const Compose& c) {
                Matrix2 ji, jo;
                const LiftedPoint mid = apply(c.inner, p, jac ? &ji : nullptr, region);
                const LiftedPoint out = apply(c.outer, mid, jac ? &jo : nullptr, region);
                if (jac) *jac = jo * ji;
                return out;
            },
            [&](const Iterate& it) {
                LiftedPoint q = p;
                Matrix2 acc, step;
                for (int i = 0; i < it.k; ++i) {
                    q = apply(it.base, q, jac ? &step : nullptr, region);
                    if (jac) acc = step * acc;
                }
                if (jac) *jac = acc;
                return q;
            },
        },
        m.node().v);
}

}  // namespace detail

/// Canonical lift applied to a point of the cover. Commutes exactly with deck
/// transformations: only the fractional part enters the arithmetic.
inline LiftedPoint eval_lift(const MapExpr& m, const LiftedPoint& p) { return detail::apply(m, p, nullptr); }

inline AnnulusPoint eval(const MapExpr& m, const AnnulusPoint& p) {
    return project(eval_lift(m, lift(p, 0))).point;
}

/// Image and Jacobian in one pass (chain rule through Compose / Iterate).
inline std::pair<LiftedPoint, Matrix2> eval_with_differential(const MapExpr& m, const LiftedPoint& p) {
    Matrix2 j;
    LiftedPoint out = detail::apply(m, p, &j);
    return {out, j};
}

/// Hash of which disk leaves contain the point along the evaluation chain.
/// The map is smooth wherever this is locally constant.
inline std::uint64_t region_signature(const MapExpr& m, const LiftedPoint& p) {
    std::uint64_t region = 0;
    detail::apply(m, p, nullptr, &region);
    return region;
}

inline Matrix2 differential(const MapExpr& m, const LiftedPoint& p) { return eval_with_differential(m, p).second; }
inline Matrix2 differential(const MapExpr& m, const AnnulusPoint& p) { return differential(m, lift(p, 0)); }

/// One-step lift displacement x(F(p)) - x(p).
inline double displacement(const MapExpr& m, const LiftedPoint& p) { return lifted_dx(eval_lift(m, p), p); }

/// max |det DF - 1| over an n x n audit grid including both boundary circles.
inline double area_defect(const MapExpr& m, int n) {
    if (n < 2) throw std::invalid_argument("area_defect: grid must be at least 2x2");
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const LiftedPoint p{0, static_cast<double>(i) / n, static_cast<double>(j) / (n - 1)};
            worst = std::max(worst, std::abs(differential(m, p).det() - 1.0));
        }
    return worst;
}

enum class Boundary { lower, upper };

inline double boundary_height(Boundary b) { return b == Boundary::lower ? 0.0 : 1.0; }

/// Translation amount of the restriction of the lift to a boundary line.
/// Every member of the family acts on each boundary circle as a rigid
/// rotation: twists by phi(y_b), local disk twists trivially.
inline double boundary_shift(const MapExpr& m, Boundary which) {
    const double yb = boundary_height(which);
    return std::visit(overloaded{
                          [&](const RigidRotation& r) { return r.a; },
                          [&](const Twist& t) { return t.profile.value(yb); },
                          [&](const LocalDiskTwist&) { return 0.0; },
                          [&](const Compose& c) { return boundary_shift(c.inner, which) + boundary_shift(c.outer, which); },
                          [&](const Iterate& it) { return it.k * boundary_shift(it.base, which); },
                      },
                      m.node().v);
}

/// Restriction of the lift to y = y_b as a lifted circle map x -> F(x).
class CircleMap {
public:
    CircleMap(MapExpr m, Boundary which) : map_(std::move(m)), which_(which) {}

    double operator()(double x) const {
        return eval_lift(map_, LiftedPoint::from_real(x, boundary_height(which_))).x();
    }
    /// Displacement F(x) - x evaluated from the fractional part only.
    double displacement(double frac) const {
        return calabi::displacement(map_, LiftedPoint{0, frac, boundary_height(which_)});
    }
    /// The constant translation when the restriction is rigid (always, for
    /// the built-in family).
    std::optional<double> rigid_shift() const { return boundary_shift(map_, which_); }
    Boundary which() const { return which_; }

private:
    MapExpr map_;
    Boundary which_;
};

inline CircleMap boundary_circle_map(const MapExpr& m, Boundary which) { return CircleMap(m, which); }

/// True if any twist in the expression uses a tabulated profile.
inline bool has_tabulated_profile(const MapExpr& m) {
    return std::visit(overloaded{
                          [](const RigidRotation&) { return false; },
                          [](const Twist& t) { return t.profile.is_tabulated(); },
                          [](const LocalDiskTwist&) { return false; },
                          [](const Compose& c) { return has_tabulated_profile(c.outer) || has_tabulated_profile(c.inner); },
                          [](const Iterate& it) { return has_tabulated_profile(it.base); },
                      },
                      m.node().v);
}

/// Samples phi' <= 0 and phi(R) = 0 for every local disk twist in m.
inline bool radial_profiles_monotone(const MapExpr& m, int samples = 256) {
    return std::visit(overloaded{
                          [](const RigidRotation&) { return true; },
                          [](const Twist&) { return true; },
                          [&](const LocalDiskTwist& d) {
                              if (d.profile.value(d.radius, d.radius) != 0.0) return false;
                              for (int i = 0; i <= samples; ++i) {
                                  const double r = d.radius * i / samples;
                                  if (d.profile.derivative(r, d.radius) > 0.0) return false;
                              }
                              return true;
                          },
                          [&](const Compose& c) {
                              return radial_profiles_monotone(c.outer, samples) &&
                                     radial_profiles_monotone(c.inner, samples);
                          },
                          [&](const Iterate& it) { return radial_profiles_monotone(it.base, samples); },
                      },
                      m.node().v);
}

inline std::string describe(const MapExpr& m) {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{
                   [&](const RigidRotation& r) { os << "rigid(a=" << r.a << ")"; },
                   [&](const Twist& t) { os << "twist(" << t.profile.describe() << ")"; },
                   [&](const LocalDiskTwist& d) {
                       os << "disk(center=(" << d.center.x() << "," << d.center.y() << "),R=" << d.radius
                          << ",c=" << d.profile.c << ")";
                   },
                   [&](const Compose& c) { os << "(" << describe(c.outer) << " o " << describe(c.inner) << ")"; },
                   [&](const Iterate& it) { os << "(" << describe(it.base) << ")^" << it.k; },
               },
               m.node().v);
    return os.str();
}

}  // namespace calabi
