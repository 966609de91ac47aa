#pragma once

// zyx Euler-angle kinematics: θ = (roll θx, pitch θy, yaw θz), θ̇ = W(θ)·ω with
// ω the body rates.

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "flexgimbal/error.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal {

inline constexpr double kSingularityMargin = 1e-3;  // rad

inline void check_pitch_singularity(const Eigen::Vector3d& euler, double margin) {
  if (!(std::abs(euler.y()) < std::numbers::pi / 2.0 - margin))
    throw SingularityError("pitch " + format_number(euler.y()) +
                           " rad is within the Euler-angle singularity margin");
}

/// Maps body rates to Euler-angle rates.
inline Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& euler,
                                         double margin = kSingularityMargin) {
  check_pitch_singularity(euler, margin);
  const double sx = std::sin(euler.x()), cx = std::cos(euler.x());
  const double cy = std::cos(euler.y()), ty = std::tan(euler.y());
  Eigen::Matrix3d w;
  // clang-format off
  w << 1.0, sx * ty,  cx * ty,
       0.0, cx,      -sx,
       0.0, sx / cy,  cx / cy;
  // clang-format on
  return w;
}

/// Closed-form W⁻¹(θ).
inline Eigen::Matrix3d euler_rate_matrix_inverse(const Eigen::Vector3d& euler,
                                                 double margin = kSingularityMargin) {
  check_pitch_singularity(euler, margin);
  const double sx = std::sin(euler.x()), cx = std::cos(euler.x());
  const double sy = std::sin(euler.y()), cy = std::cos(euler.y());
  Eigen::Matrix3d inv;
  // clang-format off
  inv << 1.0,  0.0, -sy,
         0.0,  cx,   sx * cy,
         0.0, -sx,   cx * cy;
  // clang-format on
  return inv;
}

/// Body rates from Euler-angle rates, ω = W⁻¹(θ)·θ̇.
inline Eigen::Vector3d inverse_euler_rates(const Eigen::Vector3d& euler,
                                           const Eigen::Vector3d& euler_rates,
                                           double margin = kSingularityMargin) {
  return euler_rate_matrix_inverse(euler, margin) * euler_rates;
}

}  // namespace flexgimbal
