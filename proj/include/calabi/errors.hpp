#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace calabi {

/// Six significant digits, for diagnostics (std::to_string prints tiny
/// tolerances as 0.000000).
inline std::string format_real(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

/// A refinement loop (quadrature, Birkhoff average, Newton polish) failed to
/// reach its tolerance.
class NonConvergent : public std::runtime_error {
public:
    explicit NonConvergent(const std::string& what) : std::runtime_error("NonConvergent: " + what) {}
};

/// The action gap between two measures is zero (within its error bar), so no
/// period threshold exists.
class DegenerateGap : public std::runtime_error {
public:
    explicit DegenerateGap(const std::string& what) : std::runtime_error("DegenerateGap: " + what) {}
};

/// Malformed experiment configuration; `field` is a JSON-pointer-like path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace calabi
