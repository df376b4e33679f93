#pragma once

// Verification driver: an action gap D between two invariant measures predicts
// at least two distinct periodic orbits for every period q > 1/D. The driver
// measures D, derives the threshold, and runs the orbit census for each q.
//
// A failed search cannot refute an existence statement, so FAIL verdicts are
// reported as "search exhausted (not a counterexample)".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calabi/action.hpp"
#include "calabi/orbits.hpp"
#include "calabi/rotation.hpp"

namespace calabi {

struct ActionGap {
    double gap = 0.0;
    double error = 0.0;
};

/// |A(mu1) - A(mu2)| for beta = y dx with the summed error estimates.
inline ActionGap action_gap(const MapExpr& m, const MeasureSpec& mu1, const MeasureSpec& mu2,
                           const ActionSettings& s = {}) {
    const auto ctx = ActionContext::canonical();
    const ActionValue a1 = measure_action(m, ctx, mu1, s);
    const ActionValue a2 = measure_action(m, ctx, mu2, s);
    return {std::abs(a1.value - a2.value), a1.error_estimate + a2.error_estimate};
}

/// Smallest integer strictly greater than 1/gap.
inline int q_threshold(double gap) {
    if (!(gap > 0.0)) throw DegenerateGap("action gap " + format_real(gap) + " is not positive");
    const double inv = 1.0 / gap;
    if (inv >= static_cast<double>(std::numeric_limits<int>::max() - 1))
        throw DegenerateGap("action gap " + format_real(gap) + " is too small for a period threshold");
    return static_cast<int>(std::floor(inv)) + 1;
}

struct RotationInterval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Hull of the boundary rotation numbers and the area-measure rotation number.
inline RotationInterval rotation_hull(const MapExpr& m, const ActionSettings& s = {}) {
    const double r0 = boundary_rotation_number(m, Boundary::lower, s.birkhoff.n_iter).value;
    const double r1 = boundary_rotation_number(m, Boundary::upper, s.birkhoff.n_iter).value;
    const double ra = measure_rotation(m, MeasureSpec::area(), s).value;
    return {std::min({r0, r1, ra}), std::max({r0, r1, ra})};
}

/// Integers p with p/q strictly inside (lo - 1/q, hi + 1/q).
inline std::vector<std::int64_t> candidate_windings(const RotationInterval& hull, int q) {
    if (q < 1) throw std::invalid_argument("candidate_windings: q must be >= 1");
    constexpr double eps = 1e-9;
    const double lo = hull.lo * q - 1.0, hi = hull.hi * q + 1.0;
    std::vector<std::int64_t> out;
    for (auto p = static_cast<std::int64_t>(std::floor(lo)); p <= static_cast<std::int64_t>(std::ceil(hi)); ++p)
        if (p > lo + eps && p < hi - eps) out.push_back(p);
    return out;
}

inline std::vector<std::int64_t> candidate_windings(const MapExpr& m, int q, const ActionSettings& s = {}) {
    return candidate_windings(rotation_hull(m, s), q);
}

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        default: return "INCONCLUSIVE";
    }
}

struct WindingCount {
    std::int64_t p = 0;
    int orbits = 0;
    double max_residual = 0.0;
};

struct PeriodResult {
    int q = 0;
    std::vector<std::int64_t> windings;
    std::vector<WindingCount> counts;
    std::vector<PeriodicOrbit> orbits;  // deduplicated across windings, canonical order
    std::vector<bool> in_bracket;       // parallel to orbits
    int qualifying = 0;                 // certified, in bracket, least period q when q is prime
    int grid_used = 0;
    bool prime = false;
    Verdict verdict = Verdict::inconclusive;
    std::string note;
};

struct MeasureSummary {
    std::string name;
    ActionValue action;
    RotationValue rotation;
};

struct VerificationReport {
    std::string map;
    MeasureSummary mu1, mu2;
    ActionGap gap;
    int q_threshold = 0;
    int q_max = 0;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    std::vector<PeriodResult> periods;

    bool any(Verdict v) const {
        return std::any_of(periods.begin(), periods.end(), [&](const PeriodResult& r) { return r.verdict == v; });
    }
};

inline bool is_prime(int q) {
    if (q < 2) return false;
    for (int d = 2; d * d <= q; ++d)
        if (q % d == 0) return false;
    return true;
}

struct VerifyOptions {
    ActionSettings action{};
    SearchConfig search{};
    double bracket_factor = 10.0;  // action bracket widened by this multiple of the error estimates
    double trust_factor = 10.0;    // the gap must exceed its error by this factor
};

/// Orbit census for one period over the candidate windings, doubling the seed
/// density while fewer than two qualifying orbits are known.
inline PeriodResult census(const MapExpr& m, int q, const std::vector<std::int64_t>& windings, double bracket_lo,
                           double bracket_hi, const SearchConfig& cfg) {
    PeriodResult r;
    r.q = q;
    r.windings = windings;
    r.prime = is_prime(q);
    for (int grid = cfg.grid;; grid *= 2) {
        std::vector<PeriodicOrbit> all;
        r.counts.clear();
        for (auto p : windings) {
            auto found = find_periodic_orbits(m, q, p, cfg, grid);
            WindingCount wc{p, static_cast<int>(found.size()), 0.0};
            for (const auto& o : found) wc.max_residual = std::max(wc.max_residual, o.residual);
            r.counts.push_back(wc);
            all.insert(all.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
        }
        r.orbits = deduplicate(all, cfg.dedup_tolerance);
        r.grid_used = grid;
        r.in_bracket.assign(r.orbits.size(), false);
        r.qualifying = 0;
        for (std::size_t i = 0; i < r.orbits.size(); ++i) {
            const auto& o = r.orbits[i];
            r.in_bracket[i] = o.action >= bracket_lo && o.action <= bracket_hi;
            if (o.certified() && r.in_bracket[i] && (!r.prime || o.least_period == q)) ++r.qualifying;
        }
        if (r.qualifying >= 2 || grid * 2 > cfg.max_grid) break;
    }
    return r;
}

/// Runs the census for every q in [q_threshold, q_max].
///
/// PASS needs two distinct certified orbits whose actions lie in the bracket
/// spanned by the two measure actions (widened by bracket_factor times their
/// error estimates) and, for prime q, whose least period is q. Orbits outside
/// the bracket are reported but do not count. INCONCLUSIVE marks periods where
/// the gap's error bar reaches 1/q or the gap is not trusted at all.
inline VerificationReport verify_theorem(const MapExpr& m, const MeasureSpec& mu1, const MeasureSpec& mu2,
                                         int q_max, const VerifyOptions& opt = {}) {
    VerificationReport rep;
    rep.map = describe(m);
    const auto ctx = ActionContext::canonical();
    rep.mu1 = {mu1.describe(), measure_action(m, ctx, mu1, opt.action), measure_rotation(m, mu1, opt.action)};
    rep.mu2 = {mu2.describe(), measure_action(m, ctx, mu2, opt.action), measure_rotation(m, mu2, opt.action)};
    rep.gap = {std::abs(rep.mu1.action.value - rep.mu2.action.value),
               rep.mu1.action.error_estimate + rep.mu2.action.error_estimate};
    if (!(rep.gap.gap > 1e-12) || rep.gap.gap <= rep.gap.error)
        throw DegenerateGap("action gap " + format_real(rep.gap.gap) + " +- " + format_real(rep.gap.error) +
                            " does not separate the measures");
    rep.q_threshold = q_threshold(rep.gap.gap);
    rep.q_max = q_max;
    if (q_max < rep.q_threshold)
        throw std::invalid_argument("verify_theorem: q_max " + std::to_string(q_max) + " is below the threshold " +
                                    std::to_string(rep.q_threshold));

    const double widen = opt.bracket_factor * rep.gap.error + 1e-12;
    rep.bracket_lo = std::min(rep.mu1.action.value, rep.mu2.action.value) - widen;
    rep.bracket_hi = std::max(rep.mu1.action.value, rep.mu2.action.value) + widen;
    const bool trusted = rep.gap.gap >= opt.trust_factor * rep.gap.error;
    const RotationInterval hull = rotation_hull(m, opt.action);

    for (int q = rep.q_threshold; q <= q_max; ++q) {
        PeriodResult r = census(m, q, candidate_windings(hull, q), rep.bracket_lo, rep.bracket_hi, opt.search);
        if (!trusted) {
            r.verdict = Verdict::inconclusive;
            r.note = "gap not trusted: below " + format_real(opt.trust_factor) + "x its error estimate";
        } else if (rep.gap.gap - rep.gap.error <= 1.0 / q) {
            r.verdict = Verdict::inconclusive;
            r.note = "gap error bar reaches 1/q";
        } else if (r.qualifying >= 2) {
            r.verdict = Verdict::pass;
        } else if (r.orbits.size() >= 2 && r.qualifying < 2 &&
                   std::count(r.in_bracket.begin(), r.in_bracket.end(), false) > 0) {
            r.verdict = Verdict::inconclusive;
            r.note = "orbits found but fewer than two inside the action bracket";
        } else {
            r.verdict = Verdict::fail;
            r.note = "search exhausted (not a counterexample)";
        }
        rep.periods.push_back(std::move(r));
    }
    return rep;
}

struct LocalPerturbationReport {
    double calabi_perturbed = 0.0;  // A(f o h)
    double calabi_bump = 0.0;       // A(h)
    double calabi_error = 0.0;
    double additivity_defect = 0.0;  // |A(f o h) - A(h) - A(f)|, A(f) = 0 for a rigid rotation
    ActionValue lower_action, upper_action;  // boundary actions of f o h
    VerificationReport verification;
};

/// Rigid rotation by a composed with a local disk twist h at `center`
/// (f' = R_a o h). Checks A(f') = A(h), that both boundary actions stay zero,
/// then verifies against (area measure, lower boundary measure) for
/// q in [q_threshold, q_threshold + extra_periods].
inline LocalPerturbationReport example_local_perturbation(double a, AnnulusPoint center, double radius, double c,
                                                          const VerifyOptions& opt = {}, int extra_periods = 2) {
    const MapExpr h = MapExpr::local_disk_twist(center, radius, RadialProfile{c});
    const MapExpr rot = MapExpr::rigid(a);
    const MapExpr perturbed = MapExpr::compose(rot, h);
    const auto ctx = ActionContext::canonical();

    LocalPerturbationReport rep;
    const ActionValue ap = calabi(perturbed, ctx, opt.action);
    const ActionValue ah = calabi(h, ctx, opt.action);
    const ActionValue ar = calabi(rot, ctx, opt.action);
    rep.calabi_perturbed = ap.value;
    rep.calabi_bump = ah.value;
    rep.calabi_error = ap.error_estimate + ah.error_estimate + ar.error_estimate;
    rep.additivity_defect = std::abs(ap.value - ah.value - ar.value);
    rep.lower_action = measure_action(perturbed, ctx, MeasureSpec::boundary_lower(), opt.action);
    rep.upper_action = measure_action(perturbed, ctx, MeasureSpec::boundary_upper(), opt.action);

    const ActionGap gap{std::abs(ap.value - rep.lower_action.value), ap.error_estimate + rep.lower_action.error_estimate};
    if (!(gap.gap > 1e-12)) throw DegenerateGap("local perturbation leaves the mean action at zero");
    const int q_max = q_threshold(gap.gap) + extra_periods;
    for (int den = 1; den <= q_max; ++den)
        if (std::abs(a * den - std::round(a * den)) < 1e-6 * den)
            throw std::invalid_argument("example_local_perturbation: rotation " + format_real(a) +
                                        " is within 1e-6 of a rational with denominator " + std::to_string(den));
    rep.verification = verify_theorem(perturbed, MeasureSpec::area(), MeasureSpec::boundary_lower(), q_max, opt);
    return rep;
}

}  // namespace calabi
