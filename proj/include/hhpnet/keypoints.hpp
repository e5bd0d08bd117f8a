#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <string_view>

namespace hhpnet {

inline constexpr std::size_t kNumKeypoints = 5;

/// Slot order of the five facial keypoints. Weights are trained against this
/// order; changing it invalidates every saved model.
enum class Landmark : std::size_t { Nose = 0, LeftEye = 1, RightEye = 2, LeftEar = 3, RightEar = 4 };

std::string_view landmark_name(Landmark landmark);

/// Detector output in pixels. c = 0 marks a missing point.
struct Keypoint {
  double x1 = 0.0;  // horizontal
  double x2 = 0.0;  // vertical, grows downward
  double c = 0.0;   // confidence in [0, 1]

  bool present() const { return c > 0.0; }
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct KeypointSet {
  std::array<Keypoint, kNumKeypoints> points{};

  Keypoint& operator[](Landmark l) { return points[static_cast<std::size_t>(l)]; }
  const Keypoint& operator[](Landmark l) const { return points[static_cast<std::size_t>(l)]; }
  friend bool operator==(const KeypointSet&, const KeypointSet&) = default;
};

/// Network input: per-axis centred and scaled coordinates plus confidences.
struct NormalizedInput {
  std::array<double, kNumKeypoints> x1{};
  std::array<double, kNumKeypoints> x2{};
  std::array<double, kNumKeypoints> c{};

  friend bool operator==(const NormalizedInput&, const NormalizedInput&) = default;
};

/// Centres each axis on the centroid of the present points and divides by the
/// largest absolute centred value of that axis. Missing points become (0, 0).
/// An axis whose present points all coincide maps to zeros.
/// Throws std::invalid_argument when no point is present.
NormalizedInput normalize(const KeypointSet& raw);

/// Same as normalize, reading an already normalized input as pixel values.
NormalizedInput normalize(const NormalizedInput& input);

std::size_t present_count(const KeypointSet& set);

/// Zeroes the confidence of uniformly chosen present points until exactly
/// `keep` remain. Coordinates are left untouched.
/// Throws std::invalid_argument unless 1 <= keep <= present_count(set).
KeypointSet drop_keypoints(const KeypointSet& set, std::size_t keep, std::mt19937_64& rng);

}  // namespace hhpnet
