#include "hhpnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hhpnet::synth {

namespace {

constexpr double kPoseLimit = 99.0;

}  // namespace

double NoiseModel::sigma(const EulerPose& pose) const { return base_sigma + yaw_gain * std::abs(pose.yaw); }

std::array<std::array<double, 2>, kNumKeypoints> project_landmarks(const CanonicalHead& head, const EulerPose& pose,
                                                                   double pixels_per_unit, double cx, double cy) {
  const Matrix3 r = rotation_matrix(pose);
  std::array<std::array<double, 2>, kNumKeypoints> out{};
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const auto p = apply(r, head.landmarks[i]);
    out[i] = {cx + pixels_per_unit * p[0], cy + pixels_per_unit * p[1]};
  }
  return out;
}

GeneratedSample generate_sample(const EulerPose& pose, const GeneratorOptions& options, std::mt19937_64& rng) {
  for (double a : pose.as_array()) {
    if (!(std::abs(a) <= kPoseLimit)) {
      throw std::invalid_argument("generate_sample: pose angle " + std::to_string(a) + " outside [-99, 99]");
    }
  }
  if (options.noise.base_sigma < 0.0 || options.noise.yaw_gain < 0.0) {
    throw std::invalid_argument("generate_sample: noise parameters must be non-negative");
  }
  const Camera& cam = options.camera;
  std::uniform_real_distribution<double> jitter(-cam.jitter, cam.jitter);
  const double cx = cam.center_x + (cam.jitter > 0.0 ? jitter(rng) : 0.0);
  const double cy = cam.center_y + (cam.jitter > 0.0 ? jitter(rng) : 0.0);
  const auto projected = project_landmarks(options.head, pose, cam.pixels_per_unit, cx, cy);

  const double sigma = options.noise.sigma(pose);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Turning toward +x hides the ear on the +x side, and vice versa.
  std::size_t hidden = kNumKeypoints;
  if (pose.yaw > options.noise.occlusion_yaw) hidden = static_cast<std::size_t>(Landmark::LeftEar);
  if (pose.yaw < -options.noise.occlusion_yaw) hidden = static_cast<std::size_t>(Landmark::RightEar);

  GeneratedSample s{{}, pose};
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    Keypoint& k = s.keypoints.points[i];
    const double nx = noise(rng), ny = noise(rng);
    const double u = unit(rng);
    k.x1 = projected[i][0] + sigma * nx;
    k.x2 = projected[i][1] + sigma * ny;
    k.c = i == hidden ? 0.0 : 1.0 - 0.5 * u;
  }
  return s;
}

Dataset generate_dataset(std::size_t n, const GeneratorOptions& options, std::uint64_t seed, const std::string& id_prefix) {
  if (n == 0) throw std::invalid_argument("generate_dataset: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> yaw(-options.ranges.yaw, options.ranges.yaw);
  std::uniform_real_distribution<double> pitch(-options.ranges.pitch, options.ranges.pitch);
  std::uniform_real_distribution<double> roll(-options.ranges.roll, options.ranges.roll);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = yaw(rng);
    const double p = pitch(rng);
    const double r = roll(rng);
    GeneratedSample g = generate_sample({y, p, r}, options, rng);
    if (options.drop_min_keep > 0) {
      const std::size_t present = present_count(g.keypoints);
      const std::size_t lo = std::min(options.drop_min_keep, present);
      std::uniform_int_distribution<std::size_t> keep(lo, present);
      g.keypoints = drop_keypoints(g.keypoints, keep(rng), rng);
    }
    out.push_back({id_prefix + std::to_string(i), g.keypoints, g.pose, "{}"});
  }
  return out;
}

}  // namespace hhpnet::synth
