#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace nilray {

// Numeric failure (quadrature that cannot reach its tolerance, a diverging
// Newton iteration, a violated truncation assertion).  Carries the accuracy
// that was actually achieved so callers can report diagnostics.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what,
                          double achieved = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

}  // namespace nilray
