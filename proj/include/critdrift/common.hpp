#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace critdrift {

inline constexpr double kSqrtPi = 1.7724538509055160273;
// the critical drift correction 3*sqrt(pi)
inline constexpr double kThreeSqrtPi = 3.0 * kSqrtPi;

// Raised when a solver produces non-finite values or a linear system breaks down.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double at_time)
        : std::runtime_error(what + " (t=" + std::to_string(at_time) + ")"), time_(at_time) {}
    explicit NumericalFailure(const std::string& what)
        : std::runtime_error(what), time_(std::nan("")) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace critdrift
