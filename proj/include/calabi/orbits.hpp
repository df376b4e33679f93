#pragma once

// Periodic orbits of type (q, p): zeros of G(z) = F^q(z) - z - (p, 0) in the
// universal cover, located by damped multi-start Newton, certified by their
// residual, and deduplicated modulo deck transformations and cyclic shifts.

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "calabi/action.hpp"
#include "calabi/maps.hpp"
#include "calabi/parallel.hpp"
#include "calabi/periodic_orbit.hpp"

namespace calabi {

struct SearchConfig {
    int grid = 48;                   // seed lattice is grid x grid
    int max_grid = 384;              // adaptive doubling limit used by the harness
    int newton_max_steps = 80;
    double newton_damping = 0.05;    // maximal Newton step length in the cover
    double dedup_tolerance = 1e-6;
    double margin = 0.0;             // seeds keep this distance from the boundary circles
    int max_degenerate_representatives = 4;  // per (q, p) call
    std::vector<AnnulusPoint> extra_seeds;

    void validate() const {
        if (grid < 1 || max_grid < grid || newton_max_steps < 1 || !(newton_damping > 0.0) ||
            !(dedup_tolerance > 0.0) || margin < 0.0 || margin >= 0.5 || max_degenerate_representatives < 1)
            throw std::invalid_argument("SearchConfig: parameters must be positive (margin in [0, 0.5))");
    }
};

/// Smallest singular value of DF^q - I below this marks a degenerate orbit.
inline constexpr double kDegenerateSigma = 1e-8;

namespace detail {

struct ReturnMap {
    double gx = 0.0, gy = 0.0;  // G(z)
    Matrix2 jac;                // DF^q(z) - I
    LiftedPoint image;          // F^q(z)

    double residual() const { return std::max(std::abs(gx), std::abs(gy)); }
};

inline ReturnMap return_map(const MapExpr& m, const LiftedPoint& z, int q, std::int64_t p) {
    LiftedPoint w = z;
    Matrix2 acc, step;
    for (int i = 0; i < q; ++i) {
        std::tie(w, step) = eval_with_differential(m, w);
        acc = step * acc;
    }
    acc.m00 -= 1.0;
    acc.m11 -= 1.0;
    return {lifted_dx(w, z) - static_cast<double>(p), w.y - z.y, acc, w};
}

/// Newton direction -J^+ G: the inverse when J is well conditioned, otherwise
/// the rank-one pseudo-inverse.
inline std::optional<std::array<double, 2>> newton_direction(const Matrix2& j, double gx, double gy) {
    const auto [smax, smin] = j.singular_values();
    if (!(smax > 0.0) || !std::isfinite(smax)) return std::nullopt;
    if (smin > 1e-12 * smax) {
        const double det = j.det();
        return std::array<double, 2>{-(j.m11 * gx - j.m01 * gy) / det, -(-j.m10 * gx + j.m00 * gy) / det};
    }
    // Top right-singular vector v of J from J^T J, then J^+ = v u^T / smax.
    const double a = j.m00 * j.m00 + j.m10 * j.m10, b = j.m00 * j.m01 + j.m10 * j.m11,
                 c = j.m01 * j.m01 + j.m11 * j.m11;
    const double lam = 0.5 * (a + c + std::sqrt((a - c) * (a - c) + 4.0 * b * b));
    double vx = b, vy = lam - a;
    if (std::hypot(lam - c, b) > std::hypot(vx, vy)) vx = lam - c, vy = b;
    const double nv = std::hypot(vx, vy);
    if (nv == 0.0) vx = 1.0, vy = 0.0;
    else vx /= nv, vy /= nv;
    const auto [ux, uy] = j.apply(vx, vy);  // = smax * u
    const double coef = -(ux * gx + uy * gy) / (smax * smax);
    return std::array<double, 2>{coef * vx, coef * vy};
}

inline LiftedPoint clamp_step(const LiftedPoint& z, double dx, double dy) {
    LiftedPoint out = z.translated(dx);
    out.y = std::clamp(z.y + dy, 0.0, 1.0);
    return out;
}

struct NewtonOutcome {
    LiftedPoint z;
    double residual = 0.0;
};

/// Damped Newton with step-length cap and backtracking on max|G|. Keeps
/// iterating past the certification bound until the residual stops falling.
inline NewtonOutcome newton_solve(const MapExpr& m, LiftedPoint z, int q, std::int64_t p, int max_steps,
                                  double max_step) {
    ReturnMap r = return_map(m, z, q, p);
    for (int it = 0; it < max_steps; ++it) {
        if (r.residual() < 1e-15 || !std::isfinite(r.residual())) break;
        const auto dir = newton_direction(r.jac, r.gx, r.gy);
        if (!dir) break;
        double dx = (*dir)[0], dy = (*dir)[1];
        const double len = std::hypot(dx, dy);
        if (!std::isfinite(len)) break;
        if (len > max_step) dx *= max_step / len, dy *= max_step / len;
        bool accepted = false;
        for (int k = 0; k < 12 && !accepted; ++k) {
            const LiftedPoint trial = clamp_step(z, dx, dy);
            const ReturnMap rt = return_map(m, trial, q, p);
            if (rt.residual() < r.residual()) {
                z = trial;
                r = rt;
                accepted = true;
            }
            dx *= 0.5;
            dy *= 0.5;
        }
        if (!accepted) break;
    }
    return {LiftedPoint{0, z.frac, z.y}, r.residual()};
}

}  // namespace detail

/// max norm of F^q(z) - z - (p, 0) at the first orbit point.
inline double orbit_residual(const MapExpr& m, const LiftedPoint& z, int q, std::int64_t p) {
    return detail::return_map(m, z, q, p).residual();
}

/// Orbit average of g: A(gamma) = (1/q) sum_j g(p_j).
inline double orbit_action(const MapExpr& m, const ActionContext& ctx, const PeriodicOrbit& orbit) {
    double total = 0.0;
    for (const auto& pt : orbit.points) total += action_function(m, ctx, pt);
    return total / static_cast<double>(orbit.points.size());
}

/// Minimum over cyclic relabelings of the maximal pointwise annulus distance.
inline double orbit_distance(const PeriodicOrbit& a, const PeriodicOrbit& b) {
    const std::size_t n = a.points.size();
    if (b.points.size() != n || n == 0) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n; ++s) {
        double worst = 0.0;
        for (std::size_t j = 0; j < n && worst < best; ++j) {
            const auto& pa = a.points[j];
            const auto& pb = b.points[(j + s) % n];
            worst = std::max(worst, annulus_distance(AnnulusPoint(pa.frac, pa.y), AnnulusPoint(pb.frac, pb.y)));
        }
        best = std::min(best, worst);
    }
    return best;
}

namespace detail {

inline bool canonical_less(const PeriodicOrbit& a, const PeriodicOrbit& b) {
    const auto& pa = a.points.front();
    const auto& pb = b.points.front();
    if (pa.frac != pb.frac) return pa.frac < pb.frac;
    if (pa.y != pb.y) return pa.y < pb.y;
    if (a.q != b.q) return a.q < b.q;
    return a.p < b.p;
}

/// Builds the orbit record from a Newton solution: relabels so the first
/// point has the smallest (x mod 1, y), re-polishes from there and fills the
/// derived fields.
inline PeriodicOrbit assemble_orbit(const MapExpr& m, LiftedPoint z, int q, std::int64_t p,
                                    const SearchConfig& cfg) {
    std::vector<LiftedPoint> pts;
    pts.reserve(q);
    for (int j = 0; j < q; ++j) {
        pts.push_back({0, z.frac, z.y});
        z = eval_lift(m, z);
    }
    const auto first = std::min_element(pts.begin(), pts.end(), [](const LiftedPoint& a, const LiftedPoint& b) {
        return a.frac != b.frac ? a.frac < b.frac : a.y < b.y;
    });
    NewtonOutcome polished = newton_solve(m, *first, q, p, 8, cfg.newton_damping);
    if (polished.residual > orbit_residual(m, *first, q, p)) polished = {*first, orbit_residual(m, *first, q, p)};

    PeriodicOrbit orbit;
    orbit.q = q;
    orbit.p = p;
    orbit.points.reserve(q);
    LiftedPoint w = polished.z;
    for (int j = 0; j < q; ++j) {
        orbit.points.push_back(w);
        w = eval_lift(m, w);
    }
    const ReturnMap r = return_map(m, orbit.points.front(), q, p);
    orbit.residual = r.residual();
    orbit.min_singular_value = r.jac.singular_values()[1];
    orbit.degenerate = orbit.min_singular_value < kDegenerateSigma;
    orbit.least_period = q;
    for (int d = 1; d < q; ++d) {
        if (q % d != 0 || (p * d) % q != 0) continue;
        const auto& a = orbit.points[d];
        const auto& b = orbit.points[0];
        if (annulus_distance(AnnulusPoint(a.frac, a.y), AnnulusPoint(b.frac, b.y)) < 1e-8) {
            orbit.least_period = d;
            break;
        }
    }
    orbit.action = orbit_action(m, ActionContext::canonical(), orbit);
    return orbit;
}

}  // namespace detail

/// Greedy deduplication in input order (first representative wins), then
/// canonical ordering. Idempotent.
inline std::vector<PeriodicOrbit> deduplicate(const std::vector<PeriodicOrbit>& orbits, double tolerance) {
    std::vector<PeriodicOrbit> kept;
    for (const auto& o : orbits) {
        const bool dup = std::any_of(kept.begin(), kept.end(), [&](const PeriodicOrbit& k) {
            return k.q == o.q && orbit_distance(k, o) <= tolerance;
        });
        if (!dup) kept.push_back(o);
    }
    std::stable_sort(kept.begin(), kept.end(), detail::canonical_less);
    return kept;
}

/// Seeds of the lattice search, row-major, followed by cfg.extra_seeds.
inline std::vector<LiftedPoint> seed_lattice(const SearchConfig& cfg, int grid) {
    std::vector<LiftedPoint> seeds;
    seeds.reserve(static_cast<std::size_t>(grid) * grid + cfg.extra_seeds.size());
    for (int j = 0; j < grid; ++j)
        for (int i = 0; i < grid; ++i)
            seeds.push_back({0, (i + 0.5) / grid, cfg.margin + (j + 0.5) / grid * (1.0 - 2.0 * cfg.margin)});
    for (const auto& s : cfg.extra_seeds) seeds.push_back(lift(s, 0));
    return seeds;
}

/// All certified (q, p) orbits reached from the seed lattice at density
/// `grid`. The result is deterministic and independent of the worker count.
inline std::vector<PeriodicOrbit> find_periodic_orbits(const MapExpr& m, int q, std::int64_t p,
                                                       const SearchConfig& cfg, int grid) {
    if (q < 1) throw std::invalid_argument("find_periodic_orbits: q must be >= 1");
    cfg.validate();
    const auto seeds = seed_lattice(cfg, grid);
    auto solved = parallel_map<std::optional<PeriodicOrbit>>(seeds.size(), [&](std::size_t i) {
        const auto sol = detail::newton_solve(m, seeds[i], q, p, cfg.newton_max_steps, cfg.newton_damping);
        if (!(sol.residual < kCertifiedResidual)) return std::optional<PeriodicOrbit>{};
        PeriodicOrbit o = detail::assemble_orbit(m, sol.z, q, p, cfg);
        if (!o.certified()) return std::optional<PeriodicOrbit>{};
        return std::optional<PeriodicOrbit>{std::move(o)};
    });
    std::vector<PeriodicOrbit> found;
    for (auto& s : solved)
        if (s) found.push_back(std::move(*s));
    auto unique = deduplicate(found, cfg.dedup_tolerance);
    std::vector<PeriodicOrbit> out;
    int degenerate_kept = 0;
    for (auto& o : unique) {
        if (o.degenerate && degenerate_kept++ >= cfg.max_degenerate_representatives) continue;
        out.push_back(std::move(o));
    }
    return out;
}

inline std::vector<PeriodicOrbit> find_periodic_orbits(const MapExpr& m, int q, std::int64_t p,
                                                       const SearchConfig& cfg = {}) {
    return find_periodic_orbits(m, q, p, cfg, cfg.grid);
}

/// The (q, p) orbit reached by Newton from a single starting point.
inline PeriodicOrbit orbit_from_point(const MapExpr& m, const AnnulusPoint& start, int q, std::int64_t p,
                                      const SearchConfig& cfg = {}) {
    if (q < 1) throw std::invalid_argument("orbit_from_point: q must be >= 1");
    const auto sol = detail::newton_solve(m, lift(start, 0), q, p, cfg.newton_max_steps, cfg.newton_damping);
    PeriodicOrbit o = detail::assemble_orbit(m, sol.z, q, p, cfg);
    if (!o.certified())
        throw NonConvergent("orbit_from_point: residual " + format_real(o.residual) + " after Newton");
    return o;
}

/// Newton polish of an approximate orbit to `target_residual`.
inline PeriodicOrbit refine_orbit(const MapExpr& m, const PeriodicOrbit& seed, double target_residual,
                                  const SearchConfig& cfg = {}) {
    if (seed.points.empty()) throw std::invalid_argument("refine_orbit: empty orbit");
    const LiftedPoint z0{0, seed.points.front().frac, seed.points.front().y};
    const double start = orbit_residual(m, z0, seed.q, seed.p);
    if (!(start < 1e-2))
        throw NonConvergent("refine_orbit: seed residual " + format_real(start) + " is not below 1e-2");
    if (start <= target_residual) return seed;
    const auto sol = detail::newton_solve(m, z0, seed.q, seed.p, cfg.newton_max_steps, cfg.newton_damping);
    if (!(sol.residual <= target_residual))
        throw NonConvergent("refine_orbit: residual " + format_real(sol.residual) + " after Newton");
    PeriodicOrbit out = detail::assemble_orbit(m, sol.z, seed.q, seed.p, cfg);
    if (!(out.residual <= target_residual)) throw NonConvergent("refine_orbit: residual lost after relabeling");
    return out;
}

}  // namespace calabi
