#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace coopnav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wrap an angle to (-pi, pi]. Every angular subtraction in the repo goes
// through here so the half-open convention is applied exactly once.
inline double wrap_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("wrap_angle: non-finite angle");
  }
  // remainder() lands in [-pi, pi]; fold the open endpoint onto +pi.
  double w = std::remainder(theta, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

}  // namespace coopnav
