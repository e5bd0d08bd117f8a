#pragma once

// Parametric 3-D head used as a ground-truth oracle: known poses, controllable
// heteroscedastic pixel noise and yaw-driven ear occlusion.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>

#include "hhpnet/dataset.hpp"
#include "hhpnet/keypoints.hpp"
#include "hhpnet/pose_geometry.hpp"

namespace hhpnet::synth {

/// Landmarks in head-local units, in keypoint slot order. x grows toward the
/// subject's left (image right for a frontal face), y grows downward, z points
/// along the face direction. The inter-ocular distance is 1.
struct CanonicalHead {
  std::array<std::array<double, 3>, kNumKeypoints> landmarks{{
      {0.0, 0.35, 0.55},    // nose tip
      {0.5, 0.0, 0.0},      // left eye
      {-0.5, 0.0, 0.0},     // right eye
      {0.95, 0.15, -0.6},   // left ear
      {-0.95, 0.15, -0.6},  // right ear
  }};
};

struct NoiseModel {
  double base_sigma = 0.0;       // pixels
  double yaw_gain = 0.0;         // pixels per degree of |yaw|
  double occlusion_yaw = 60.0;   // degrees; beyond it the far-side ear is hidden

  double sigma(const EulerPose& pose) const;
};

/// Noise preset used by the CLI's "hetero" option and the acceptance runs:
/// sub-pixel at frontal poses, a few pixels near profile.
inline NoiseModel heteroscedastic_noise() { return {0.5, 0.05, 60.0}; }

struct Camera {
  double pixels_per_unit = 100.0;
  double center_x = 320.0;
  double center_y = 240.0;
  double jitter = 40.0;  // uniform +- offset of the head centre in pixels
};

struct PoseRanges {
  double yaw = 75.0;
  double pitch = 60.0;
  double roll = 40.0;
};

struct GeneratorOptions {
  CanonicalHead head{};
  NoiseModel noise{};
  Camera camera{};
  PoseRanges ranges{};
  /// When set, each sample is reduced to a uniformly chosen number of points
  /// in [drop_min_keep, present] via drop_keypoints. 0 disables dropping.
  std::size_t drop_min_keep = 0;
};

struct GeneratedSample {
  KeypointSet keypoints;
  EulerPose pose;
};

/// Noise-free projected landmark positions (pixels) of `pose` centred at (cx, cy).
std::array<std::array<double, 2>, kNumKeypoints> project_landmarks(const CanonicalHead& head, const EulerPose& pose,
                                                                   double pixels_per_unit, double cx, double cy);

/// Rotates the canonical head, projects orthographically, adds isotropic
/// Gaussian noise of sigma(pose) and hides the far-side ear past occlusion_yaw.
/// Visible points get confidence uniform in (0.5, 1].
/// Throws std::invalid_argument for poses outside [-99, 99] on any angle.
GeneratedSample generate_sample(const EulerPose& pose, const GeneratorOptions& options, std::mt19937_64& rng);

/// n i.i.d. samples with poses uniform in the configured ranges. Ids are
/// "<prefix><index>". Throws std::invalid_argument when n == 0.
Dataset generate_dataset(std::size_t n, const GeneratorOptions& options, std::uint64_t seed,
                         const std::string& id_prefix = "s");

}  // namespace hhpnet::synth
