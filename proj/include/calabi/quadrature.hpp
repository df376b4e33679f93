#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <queue>
#include <string>
#include <vector>

#include "calabi/errors.hpp"
#include "calabi/parallel.hpp"

namespace calabi {

/// Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

namespace detail {
template <int N>
GaussRule expand_boost_rule() {
    using Rule = boost::math::quadrature::gauss<double, N>;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    GaussRule r;
    // Boost stores the non-negative half; rebuild the symmetric rule.
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        r.nodes.push_back(-x[i]);
        r.weights.push_back(w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.nodes.push_back(x[i]);
        r.weights.push_back(w[i]);
    }
    return r;
}
}  // namespace detail

inline const GaussRule& gauss_legendre(int points) {
    static const GaussRule g3 = detail::expand_boost_rule<3>();
    static const GaussRule g4 = detail::expand_boost_rule<4>();
    static const GaussRule g5 = detail::expand_boost_rule<5>();
    static const GaussRule g8 = detail::expand_boost_rule<8>();
    static const GaussRule g10 = detail::expand_boost_rule<10>();
    switch (points) {
        case 3: return g3;
        case 4: return g4;
        case 5: return g5;
        case 8: return g8;
        case 10: return g10;
        default: throw std::invalid_argument("gauss_legendre: unsupported point count " + std::to_string(points));
    }
}

/// A value with the half-width of its last convergence increment.
struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

/// Composite Gauss rule with `panels` equal panels on [a, b].
template <class Fn>
double composite_gauss(Fn&& f, double a, double b, int panels, const GaussRule& rule) {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        double s = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
        total += 0.5 * h * s;
    }
    return total;
}

/// Settings for the adaptive 2-D integrator over the unit square.
struct QuadratureSpec2D {
    int points = 8;           // Gauss points per cell and axis
    int initial_panels = 8;   // starting grid is initial_panels x initial_panels cells
    int max_panels = 1 << 12; // finest cell edge is 1 / max_panels
    int max_cells = 400000;
    double tolerance = 1e-8;  // bound on the summed cell error estimates
};

namespace detail {
template <class Fn>
double tensor_gauss(Fn& f, double x0, double y0, double h, const GaussRule& rule) {
    double total = 0.0;
    for (std::size_t j = 0; j < rule.size(); ++j) {
        const double y = y0 + 0.5 * h * (1.0 + rule.nodes[j]);
        double row = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) row += rule.weights[i] * f(x0 + 0.5 * h * (1.0 + rule.nodes[i]), y);
        total += rule.weights[j] * row;
    }
    return 0.25 * h * h * total;
}

struct Cell {
    double x0, y0, h;
    double whole;                 // one tensor rule over the cell
    std::array<double, 4> quarter;  // the rule on each quadrant
    double value() const { return (quarter[0] + quarter[1]) + (quarter[2] + quarter[3]); }
    double error() const { return std::abs(value() - whole); }
};

template <class Fn>
Cell make_cell(Fn& f, double x0, double y0, double h, double whole, const GaussRule& rule) {
    const double k = 0.5 * h;
    return {x0, y0, h, whole,
            {tensor_gauss(f, x0, y0, k, rule), tensor_gauss(f, x0 + k, y0, k, rule), tensor_gauss(f, x0, y0 + k, k, rule),
             tensor_gauss(f, x0 + k, y0 + k, k, rule)}};
}
}  // namespace detail

/// Globally adaptive tensor Gauss-Legendre over [0,1]^2. Each cell compares
/// one rule against the sum over its quadrants; the cell with the largest
/// difference is split until the summed differences fall below
/// spec.tolerance. The starting grid is evaluated in parallel, the
/// refinement serially, so the result does not depend on the worker count.
template <class Fn>
Estimate integrate_unit_square(Fn&& f, const QuadratureSpec2D& spec = {}) {
    const GaussRule& rule = gauss_legendre(spec.points);
    const int n0 = spec.initial_panels;
    const double h0 = 1.0 / n0;
    std::vector<detail::Cell> cells = parallel_map<detail::Cell>(static_cast<std::size_t>(n0) * n0, [&](std::size_t k) {
        const double x0 = static_cast<double>(k % n0) * h0, y0 = static_cast<double>(k / n0) * h0;
        return detail::make_cell(f, x0, y0, h0, detail::tensor_gauss(f, x0, y0, h0, rule), rule);
    });
    std::vector<bool> leaf(cells.size(), true);

    // max-heap on error, ties broken by the lower index
    using Entry = std::pair<double, std::size_t>;
    auto lower = [](const Entry& a, const Entry& b) { return a.first < b.first || (a.first == b.first && a.second > b.second); };
    std::priority_queue<Entry, std::vector<Entry>, decltype(lower)> heap(lower);
    CompensatedSum error;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        heap.push({cells[k].error(), k});
        error.add(cells[k].error());
    }
    const double finest = 1.0 / spec.max_panels;
    auto total = [&] {
        std::vector<double> v, e;
        for (std::size_t k = 0; k < cells.size(); ++k)
            if (leaf[k]) {
                v.push_back(cells[k].value());
                e.push_back(cells[k].error());
            }
        return Estimate{pairwise_sum(v), pairwise_sum(e)};
    };
    while (true) {
        if (error.value() < spec.tolerance) {
            const Estimate e = total();  // the running sum can drift; confirm
            if (e.error < spec.tolerance) return e;
            error = CompensatedSum{};
            error.add(e.error);
        }
        if (heap.empty() || static_cast<int>(cells.size()) + 4 > spec.max_cells) break;
        const auto [err, k] = heap.top();
        heap.pop();
        const detail::Cell c = cells[k];
        if (0.5 * c.h < finest) continue;  // stays a leaf with its error counted
        leaf[k] = false;
        error.add(-err);
        const double s = 0.5 * c.h;
        const std::array<std::pair<double, double>, 4> origin = {
            {{c.x0, c.y0}, {c.x0 + s, c.y0}, {c.x0, c.y0 + s}, {c.x0 + s, c.y0 + s}}};
        for (int q = 0; q < 4; ++q) {
            cells.push_back(detail::make_cell(f, origin[q].first, origin[q].second, s, c.quarter[q], rule));
            leaf.push_back(true);
            heap.push({cells.back().error(), cells.size() - 1});
            error.add(cells.back().error());
        }
    }
    throw NonConvergent("2-D quadrature error estimate " + format_real(total().error) + " above " +
                        format_real(spec.tolerance) + " (" + std::to_string(cells.size()) + " cells, finest 1/" +
                        std::to_string(spec.max_panels) + ")");
}

/// One-dimensional composite Gauss integration on [a, b] with panel doubling.
template <class Fn>
Estimate integrate_interval(Fn&& f, double a, double b, double tolerance = 1e-12, int points = 8,
                            int max_panels = 1 << 14) {
    const GaussRule& rule = gauss_legendre(points);
    double previous = composite_gauss(f, a, b, 4, rule);
    for (int panels = 8; panels <= max_panels; panels *= 2) {
        const double current = composite_gauss(f, a, b, panels, rule);
        const double increment = std::abs(current - previous);
        if (increment < tolerance * std::max(1.0, std::abs(current))) return {current, 0.5 * increment};
        previous = current;
    }
    throw NonConvergent("1-D quadrature on [" + format_real(a) + ", " + format_real(b) + "]");
}

}  // namespace calabi
