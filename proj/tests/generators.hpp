#pragma once

// Random built-in maps for property tests.

#include "calabi/maps.hpp"
#include "oracles.hpp"

namespace gen {

inline calabi::MapExpr random_disk(oracle::Gen& g, double max_c = 20.0) {
    const double cy = g.uniform(0.3, 0.7);
    const double R = g.uniform(0.05, std::min(cy, 1.0 - cy) - 0.02);
    return calabi::MapExpr::local_disk_twist(calabi::AnnulusPoint(g.uniform(), cy), R,
                                             calabi::RadialProfile{g.uniform(-max_c, max_c)});
}

inline calabi::MapExpr random_leaf(oracle::Gen& g, double max_c = 20.0) {
    switch (g.integer(0, 3)) {
        case 0: return calabi::MapExpr::rigid(g.uniform(-1.0, 1.0));
        case 1: return calabi::MapExpr::twist(calabi::TwistProfile::linear(g.uniform(-2.0, 2.0)));
        case 2: return calabi::MapExpr::twist(calabi::TwistProfile::bump(g.uniform(-1.0, 1.0)));
        default: return random_disk(g, max_c);
    }
}

/// Compositions of 2 to `max_leaves` leaves, occasionally iterated.
inline calabi::MapExpr random_composition(oracle::Gen& g, int max_leaves = 3, double max_c = 20.0,
                                          bool allow_iterate = true) {
    calabi::MapExpr m = random_leaf(g, max_c);
    const int n = g.integer(2, max_leaves);
    for (int i = 1; i < n; ++i) m = calabi::MapExpr::compose(random_leaf(g, max_c), m);
    if (allow_iterate && g.integer(0, 3) == 0) m = calabi::MapExpr::iterate(m, 2);
    return m;
}

/// One map of every family composed together.
inline calabi::MapExpr all_builtins() {
    using namespace calabi;
    return MapExpr::compose(
        MapExpr::rigid(0.3),
        MapExpr::compose(MapExpr::twist(TwistProfile::bump(0.4)),
                         MapExpr::compose(MapExpr::local_disk_twist(AnnulusPoint(0.4, 0.5), 0.3, RadialProfile{6.0}),
                                          MapExpr::twist(TwistProfile::linear(1.0)))));
}

}  // namespace gen
