#pragma once

#include <cmath>
#include <concepts>
#include <stdexcept>

#include "common.hpp"

namespace critdrift::drift {

// X(t) = 2(t+1) - (3/2)log(t+1) - cbar/sqrt(t+1)
struct DriftExpansion {
    double cbar = 0.0;

    static DriftExpansion critical() { return {kThreeSqrtPi}; }
};

// Fixed speed c, used for the time-homogeneous Monte Carlo comparison.
struct ConstantDrift {
    double c = 2.0;
};

struct SelfSimilarForcing {
    double a;  // multiplies W_y - (y/4) W
    double b;  // multiplies W
};

namespace detail {
inline void check_time(double t, const char* who) {
    if (!(t >= 0.0)) throw std::domain_error(std::string(who) + ": negative time");
}
}  // namespace detail

inline double front_position(double t, const DriftExpansion& d) {
    detail::check_time(t, "front_position");
    const double s = t + 1.0;
    return 2.0 * s - 1.5 * std::log(s) - d.cbar / std::sqrt(s);
}

inline double front_speed(double t, const DriftExpansion& d) {
    detail::check_time(t, "front_speed");
    const double s = t + 1.0;
    return 2.0 - 1.5 / s + 0.5 * d.cbar / (s * std::sqrt(s));
}

inline double front_position(double t, const ConstantDrift& d) {
    detail::check_time(t, "front_position");
    return d.c * t;
}

inline double front_speed(double t, const ConstantDrift& d) {
    detail::check_time(t, "front_speed");
    return d.c;
}

inline SelfSimilarForcing selfsimilar_forcing(double tau, const DriftExpansion& d) {
    if (!(tau >= 0.0)) throw std::domain_error("selfsimilar_forcing: negative tau");
    const double eh = std::exp(-0.5 * tau);
    return {0.5 * d.cbar * eh * eh - 1.5 * eh, -0.5 * d.cbar * eh};
}

template <class D>
concept DriftSchedule = requires(const D& d, double t) {
    { front_speed(t, d) } -> std::convertible_to<double>;
};

}  // namespace critdrift::drift
