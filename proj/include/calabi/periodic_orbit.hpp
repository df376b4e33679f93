#pragma once

#include <cstdint>
#include <vector>

#include "calabi/phase_space.hpp"

namespace calabi {

/// Certification bound on max |F^q(z0) - z0 - (p, 0)|.
inline constexpr double kCertifiedResidual = 1e-9;

/// A periodic orbit of type (q, p): F^q(z) = z + (p, 0) in the cover.
/// points[j + 1] = F(points[j]); points[0] lies on sheet 0.
struct PeriodicOrbit {
    int q = 1;
    std::int64_t p = 0;
    std::vector<LiftedPoint> points;
    double residual = 0.0;
    int least_period = 1;
    double action = 0.0;          // orbit average of g for y dx, base point (0, 0)
    bool degenerate = false;      // I - DF^q nearly singular (orbit lies on a solution curve)
    double min_singular_value = 0.0;  // of DF^q - I at points[0]

    bool certified() const { return residual < kCertifiedResidual; }
    double rotation_number() const { return static_cast<double>(p) / q; }
};

}  // namespace calabi
