#include "hhpnet/pose_geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace hhpnet {

namespace {

// Wraps into [-180, 180], keeping +180 as +180.
double wrap180(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  w -= 180.0;
  if (w == -180.0 && deg > 0.0) w = 180.0;
  return w;
}

}  // namespace

EulerPose canonicalize(const EulerPose& pose) {
  double yaw = wrap180(pose.yaw);
  double pitch = wrap180(pose.pitch);
  double roll = wrap180(pose.roll);
  // Yaw is the middle rotation, so it is the one folded into [-90, 90]:
  // Rx(p) Ry(y) Rz(r) == Rx(p + 180) Ry(180 - y) Rz(r + 180).
  if (yaw > 90.0 || yaw < -90.0) {
    yaw = (yaw > 0.0 ? 180.0 : -180.0) - yaw;
    pitch = wrap180(pitch + 180.0);
    roll = wrap180(roll + 180.0);
  }
  return {yaw, pitch, roll};
}

PlaneVector project_direction(const EulerPose& pose) {
  const double y = deg_to_rad(pose.yaw);
  const double p = deg_to_rad(pose.pitch);
  return {std::sin(y), -std::cos(y) * std::sin(p)};
}

Matrix3 rotation_matrix(const EulerPose& pose) {
  const double cy = std::cos(deg_to_rad(pose.yaw)), sy = std::sin(deg_to_rad(pose.yaw));
  const double cp = std::cos(deg_to_rad(pose.pitch)), sp = std::sin(deg_to_rad(pose.pitch));
  const double cr = std::cos(deg_to_rad(pose.roll)), sr = std::sin(deg_to_rad(pose.roll));
  const Matrix3 rx{{{1, 0, 0}, {0, cp, -sp}, {0, sp, cp}}};
  const Matrix3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  const Matrix3 rz{{{cr, -sr, 0}, {sr, cr, 0}, {0, 0, 1}}};
  return multiply(rx, multiply(ry, rz));
}

Matrix3 transpose(const Matrix3& m) {
  Matrix3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = m[j][i];
  return t;
}

Matrix3 multiply(const Matrix3& a, const Matrix3& b) {
  Matrix3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

double determinant(const Matrix3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

std::array<double, 3> apply(const Matrix3& m, const std::array<double, 3>& v) {
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return out;
}

AngleErrors angular_error(const EulerPose& pred, const EulerPose& gt) {
  return {std::abs(pred.yaw - gt.yaw), std::abs(pred.pitch - gt.pitch), std::abs(pred.roll - gt.roll)};
}

MaeSummary mae(std::span<const AngleErrors> errors) {
  if (errors.empty()) throw std::invalid_argument("mae: empty evaluation set");
  MaeSummary s;
  for (const auto& e : errors) {
    s.yaw += e.yaw;
    s.pitch += e.pitch;
    s.roll += e.roll;
  }
  const double n = static_cast<double>(errors.size());
  s.yaw /= n;
  s.pitch /= n;
  s.roll /= n;
  s.overall = (s.yaw + s.pitch + s.roll) / 3.0;
  return s;
}

}  // namespace hhpnet
