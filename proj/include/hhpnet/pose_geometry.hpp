#pragma once

#include <array>
#include <span>

namespace hhpnet {

/// Head orientation as Tait-Bryan angles, stored in degrees.
/// Canonical ranges: yaw and roll in [-180, 180], pitch in [-90, 90].
struct EulerPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  std::array<double, 3> as_array() const { return {yaw, pitch, roll}; }
  static EulerPose from_array(std::span<const double, 3> v) { return {v[0], v[1], v[2]}; }

  friend bool operator==(const EulerPose&, const EulerPose&) = default;
};

/// End-point of the head direction on the image plane. y grows downward.
struct PlaneVector {
  double x = 0.0;
  double y = 0.0;
};

/// Row-major 3x3 rotation.
using Matrix3 = std::array<std::array<double, 3>, 3>;

struct AngleErrors {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  double overall() const { return (yaw + pitch + roll) / 3.0; }
};

struct MaeSummary {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double overall = 0.0;
};

constexpr double kPi = 3.14159265358979323846;
constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Maps any finite triple onto the canonical ranges while describing the same
/// rotation: yaw in [-90, 90], pitch and roll in [-180, 180]. A yaw beyond
/// +-90 is reflected and 180 is added to pitch and roll.
EulerPose canonicalize(const EulerPose& pose);

/// (sin yaw, -cos yaw * sin pitch). Roll does not move the projected direction.
PlaneVector project_direction(const EulerPose& pose);

/// R = Rx(pitch) * Ry(yaw) * Rz(roll) in a camera frame with x right, y down
/// and z along the face's forward axis. R * (0, 0, 1) projects onto the image
/// plane exactly as project_direction.
Matrix3 rotation_matrix(const EulerPose& pose);

Matrix3 transpose(const Matrix3& m);
Matrix3 multiply(const Matrix3& a, const Matrix3& b);
double determinant(const Matrix3& m);
std::array<double, 3> apply(const Matrix3& m, const std::array<double, 3>& v);

/// Per-angle absolute difference in degrees. No wraparound.
AngleErrors angular_error(const EulerPose& pred, const EulerPose& gt);

/// Per-angle means plus the mean of the three. Throws std::invalid_argument on
/// an empty list.
MaeSummary mae(std::span<const AngleErrors> errors);

}  // namespace hhpnet
