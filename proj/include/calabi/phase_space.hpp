#pragma once

// Annulus A = S^1 x [0,1] with the angle measured in turns, its universal
// cover R x [0,1], polyline paths and line integrals of 1-forms.
//
// Orientation: the area form is omega = dy ^ dx. Its canonical primitive is
// beta = y dx.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "calabi/errors.hpp"
#include "calabi/quadrature.hpp"

namespace calabi {

/// Reduces a real angle (turns) to [0, 1). Also returns floor(x), corrected
/// for the case where x - floor(x) rounds up to 1.
inline std::pair<double, std::int64_t> split_turns(double x) {
    double fl = std::floor(x);
    double frac = x - fl;
    if (frac >= 1.0) {
        frac = 0.0;
        fl += 1.0;
    }
    return {frac, static_cast<std::int64_t>(fl)};
}

inline double normalize_turns(double x) { return split_turns(x).first; }

/// Point on the annulus: x in [0, 1), y in [0, 1].
class AnnulusPoint {
public:
    AnnulusPoint() = default;
    AnnulusPoint(double x, double y) : x_(normalize_turns(x)), y_(y) {
        if (!std::isfinite(x) || !std::isfinite(y)) throw std::invalid_argument("AnnulusPoint: non-finite coordinate");
        if (y < 0.0 || y > 1.0) throw std::invalid_argument("AnnulusPoint: y = " + format_real(y) + " outside [0, 1]");
    }

    double x() const { return x_; }
    double y() const { return y_; }

    friend bool operator==(const AnnulusPoint&, const AnnulusPoint&) = default;

private:
    double x_ = 0.0;
    double y_ = 0.0;
};

/// Point of the universal cover, stored as (sheet, fractional angle, y) so that
/// deck transformations are exact and long orbits keep full precision in the
/// fractional part. The real lift is sheet + frac.
struct LiftedPoint {
    std::int64_t sheet = 0;
    double frac = 0.0;  // in [0, 1)
    double y = 0.0;

    static LiftedPoint from_real(double x, double y) {
        auto [frac, sheet] = split_turns(x);
        return {sheet, frac, y};
    }

    double x() const { return static_cast<double>(sheet) + frac; }

    /// Moves by (dx, dy); the integer part of dx is carried into the sheet.
    LiftedPoint translated(double dx, double dy = 0.0) const {
        auto [f, carry] = split_turns(frac + dx);
        return {sheet + carry, f, y + dy};
    }

    /// Deck transformation (x, y) -> (x + n, y).
    LiftedPoint deck(std::int64_t n) const { return {sheet + n, frac, y}; }

    friend bool operator==(const LiftedPoint&, const LiftedPoint&) = default;
};

/// Difference a - b of lifted x coordinates, exact in the integer part.
inline double lifted_dx(const LiftedPoint& a, const LiftedPoint& b) {
    return static_cast<double>(a.sheet - b.sheet) + (a.frac - b.frac);
}

struct Projection {
    AnnulusPoint point;
    std::int64_t winding = 0;
};

inline Projection project(const LiftedPoint& p) { return {AnnulusPoint(p.frac, p.y), p.sheet}; }

inline LiftedPoint lift(const AnnulusPoint& p, std::int64_t sheet) { return {sheet, p.x(), p.y()}; }

/// Distance on the annulus with the circle metric in x.
inline double annulus_distance(const AnnulusPoint& a, const AnnulusPoint& b) {
    double dx = std::abs(a.x() - b.x());
    dx = std::min(dx, 1.0 - dx);
    return std::hypot(dx, a.y() - b.y());
}

/// Polyline in the universal cover. `refinement` is the maximal sub-segment
/// length used by the line-integral quadrature at its first pass.
class PolylinePath {
public:
    PolylinePath(std::vector<std::array<double, 2>> vertices, double refinement = 0.25)
        : vertices_(std::move(vertices)), refinement_(refinement) {
        if (vertices_.size() < 2) throw std::invalid_argument("PolylinePath: need at least two vertices");
        if (!(refinement_ > 0.0)) throw std::invalid_argument("PolylinePath: refinement must be positive");
        for (std::size_t i = 1; i < vertices_.size(); ++i)
            if (vertices_[i] == vertices_[i - 1])
                throw std::invalid_argument("PolylinePath: repeated vertex " + std::to_string(i));
    }

    static PolylinePath segment(const LiftedPoint& a, const LiftedPoint& b, double refinement = 0.25) {
        return PolylinePath({{a.x(), a.y}, {b.x(), b.y}}, refinement);
    }

    const std::vector<std::array<double, 2>>& vertices() const { return vertices_; }
    double refinement() const { return refinement_; }

    PolylinePath reversed() const {
        auto v = vertices_;
        std::reverse(v.begin(), v.end());
        return {std::move(v), refinement_};
    }

    /// This path followed by `next`; next must start where this one ends.
    PolylinePath then(const PolylinePath& next) const {
        if (next.vertices_.front() != vertices_.back())
            throw std::invalid_argument("PolylinePath::then: paths do not connect");
        auto v = vertices_;
        v.insert(v.end(), next.vertices_.begin() + 1, next.vertices_.end());
        return {std::move(v), std::min(refinement_, next.refinement_)};
    }

    /// Net change of the lifted x coordinate; an integer for closed loops on A.
    double x_displacement() const { return vertices_.back()[0] - vertices_.front()[0]; }

private:
    std::vector<std::array<double, 2>> vertices_;
    double refinement_;
};

struct CanonicalBeta {};  // y dx
struct ShiftedBeta {      // y dx + c dx
    double c = 0.0;
};
/// a(x, y) dx + b(x, y) dy with x the lifted coordinate.
struct ExplicitField {
    std::function<double(double, double)> a;
    std::function<double(double, double)> b;
    bool asserted_primitive = false;  // caller claims d(beta) = omega
};

class OneForm {
public:
    using Variant = std::variant<CanonicalBeta, ShiftedBeta, ExplicitField>;

    OneForm() : form_(CanonicalBeta{}) {}
    OneForm(Variant v) : form_(std::move(v)) {}

    static OneForm canonical() { return OneForm(CanonicalBeta{}); }
    static OneForm shifted(double c) { return OneForm(ShiftedBeta{c}); }

    const Variant& variant() const { return form_; }

    /// Coefficients (a, b) of a dx + b dy at a point of the cover.
    std::array<double, 2> coefficients(double x, double y) const {
        return std::visit(
            [&](const auto& f) -> std::array<double, 2> {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, CanonicalBeta>)
                    return {y, 0.0};
                else if constexpr (std::is_same_v<T, ShiftedBeta>)
                    return {y + f.c, 0.0};
                else
                    return {f.a(x, y), f.b(x, y)};
            },
            form_);
    }

    /// The constant c of y dx + c dx, or nullopt for an explicit field.
    std::optional<double> shift() const {
        if (std::holds_alternative<CanonicalBeta>(form_)) return 0.0;
        if (auto* s = std::get_if<ShiftedBeta>(&form_)) return s->c;
        return std::nullopt;
    }

    bool is_primitive_by_construction() const { return !std::holds_alternative<ExplicitField>(form_); }

private:
    Variant form_;
};

/// max |d(beta) - omega| over an n x n grid, by central differences. With
/// omega = dy ^ dx this is |da/dy - db/dx - 1|.
inline double primitive_defect(const OneForm& form, int n = 16, double h = 1e-5) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = (i + 0.5) / n;
            const double y = h + (j + 0.5) / n * (1.0 - 2.0 * h);
            const double da_dy = (form.coefficients(x, y + h)[0] - form.coefficients(x, y - h)[0]) / (2 * h);
            const double db_dx = (form.coefficients(x + h, y)[1] - form.coefficients(x - h, y)[1]) / (2 * h);
            worst = std::max(worst, std::abs(da_dy - db_dx - 1.0));
        }
    return worst;
}

/// Settings for line integrals: composite Gauss per sub-segment, with each
/// panel halved locally until its two halves agree with it to a share of
/// `tolerance` (absolute) proportional to the panel length.
struct QuadratureSpec {
    int points = 5;
    double tolerance = 1e-10;
    int max_halvings = 30;  // depth limit of the local bisection
    int region_samples = 256;  // per panel, when searching for kinks
};

namespace detail {
// Panels are bisected at least kMinDepth times before a comparison is
// trusted: a coarse panel can straddle a small disk and agree with its halves
// by accident.
inline constexpr int kMinDepth = 4;

template <class F>
double adaptive_panel(F& f, double a, double b, double whole, double tol, int level, int max_level,
                      const GaussRule& rule, int& failures) {
    const double m = 0.5 * (a + b);
    const double left = composite_gauss(f, a, m, 1, rule), right = composite_gauss(f, m, b, 1, rule);
    const double refined = left + right;
    const double floor = 1e-14 * (std::abs(left) + std::abs(right));
    if (level >= kMinDepth && std::abs(refined - whole) <= std::max(tol, floor)) return refined;
    if (level == max_level) {
        ++failures;
        return refined;
    }
    return adaptive_panel(f, a, m, left, 0.5 * tol, level + 1, max_level, rule, failures) +
           adaptive_panel(f, m, b, right, 0.5 * tol, level + 1, max_level, rule, failures);
}
}  // namespace detail

/// Region callback that never reports a kink.
struct NoRegions {
    std::uint64_t operator()(double, double) const { return 0; }
};

namespace detail {
/// Breakpoints in (a, b) where region(t) changes, located by sampling and
/// bisection to machine precision.
template <class Region>
void region_breaks(Region& region, double a, double b, int samples, std::vector<double>& out) {
    double t0 = a;
    std::uint64_t r0 = region(a);
    for (int i = 1; i <= samples; ++i) {
        const double t1 = a + (b - a) * i / samples;
        const std::uint64_t r1 = region(t1);
        if (r1 != r0) {
            double lo = t0, hi = t1;
            while (true) {
                const double mid = 0.5 * (lo + hi);
                if (!(mid > lo && mid < hi)) break;
                (region(mid) == r0 ? lo : hi) = mid;
            }
            out.push_back(hi);
        }
        t0 = t1;
        r0 = r1;
    }
}
}  // namespace detail

/// Integrates integrand(x, y, dx/dt, dy/dt) dt along every segment of the path
/// (each parametrized by t in [0, 1]). Panels start at the path's refinement
/// length and are split wherever region(x, y) changes value; the integrand
/// is assumed smooth between such breaks. Bisection after that is local.
template <class Integrand, class Region = NoRegions>
double integrate_along(const PolylinePath& path, Integrand&& integrand, const QuadratureSpec& quad = {},
                       Region region = {}) {
    const GaussRule& rule = gauss_legendre(quad.points);
    const auto& v = path.vertices();
    double total = 0.0;
    int failures = 0;
    const double per_segment = quad.tolerance / static_cast<double>(v.size() - 1);
    std::vector<double> cuts;
    for (std::size_t s = 1; s < v.size(); ++s) {
        const double x0 = v[s - 1][0], y0 = v[s - 1][1];
        const double dx = v[s][0] - x0, dy = v[s][1] - y0;
        auto f = [&](double t) { return integrand(x0 + t * dx, y0 + t * dy, dx, dy); };
        auto r = [&](double t) { return region(x0 + t * dx, y0 + t * dy); };
        const int pieces = std::max(1, static_cast<int>(std::ceil(std::hypot(dx, dy) / path.refinement())));
        for (int k = 0; k < pieces; ++k) {
            const double a = static_cast<double>(k) / pieces, b = static_cast<double>(k + 1) / pieces;
            cuts.assign(1, a);
            if constexpr (!std::is_same_v<Region, NoRegions>) detail::region_breaks(r, a, b, quad.region_samples, cuts);
            cuts.push_back(b);
            for (std::size_t c = 1; c < cuts.size(); ++c) {
                const double lo = cuts[c - 1], hi = cuts[c];
                if (!(hi > lo)) continue;
                const double tol = per_segment / pieces * (hi - lo) / (b - a);
                total += detail::adaptive_panel(f, lo, hi, composite_gauss(f, lo, hi, 1, rule), tol, 0,
                                                quad.max_halvings, rule, failures);
            }
        }
    }
    if (failures > 0)
        throw NonConvergent("line integral: " + std::to_string(failures) + " panels above tolerance after " +
                            std::to_string(quad.max_halvings) + " halvings");
    return total;
}

inline double line_integral(const OneForm& form, const PolylinePath& path, const QuadratureSpec& quad = {}) {
    return integrate_along(
        path,
        [&](double x, double y, double dx, double dy) {
            const auto [a, b] = form.coefficients(x, y);
            return a * dx + b * dy;
        },
        quad);
}

}  // namespace calabi
