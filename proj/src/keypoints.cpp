#include "hhpnet/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhpnet {

namespace {

void normalize_axis(std::array<double, kNumKeypoints>& axis, const std::array<double, kNumKeypoints>& conf) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    if (conf[i] > 0.0) {
      sum += axis[i];
      ++n;
    }
  }
  const double centroid = sum / static_cast<double>(n);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    if (conf[i] > 0.0) {
      axis[i] -= centroid;
      max_abs = std::max(max_abs, std::abs(axis[i]));
    } else {
      axis[i] = 0.0;
    }
  }
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    axis[i] = (max_abs > 0.0 && conf[i] > 0.0) ? axis[i] / max_abs : 0.0;
  }
}

}  // namespace

std::string_view landmark_name(Landmark landmark) {
  switch (landmark) {
    case Landmark::Nose: return "nose";
    case Landmark::LeftEye: return "left_eye";
    case Landmark::RightEye: return "right_eye";
    case Landmark::LeftEar: return "left_ear";
    case Landmark::RightEar: return "right_ear";
  }
  return "unknown";
}

NormalizedInput normalize(const NormalizedInput& input) {
  if (std::none_of(input.c.begin(), input.c.end(), [](double c) { return c > 0.0; })) {
    throw std::invalid_argument("normalize: no keypoint with positive confidence");
  }
  NormalizedInput out = input;
  normalize_axis(out.x1, out.c);
  normalize_axis(out.x2, out.c);
  return out;
}

NormalizedInput normalize(const KeypointSet& raw) {
  NormalizedInput in;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    in.x1[i] = raw.points[i].x1;
    in.x2[i] = raw.points[i].x2;
    in.c[i] = raw.points[i].c;
  }
  return normalize(in);
}

std::size_t present_count(const KeypointSet& set) {
  return static_cast<std::size_t>(
      std::count_if(set.points.begin(), set.points.end(), [](const Keypoint& k) { return k.present(); }));
}

KeypointSet drop_keypoints(const KeypointSet& set, std::size_t keep, std::mt19937_64& rng) {
  const std::size_t present = present_count(set);
  if (keep < 1 || keep > present) {
    throw std::invalid_argument("drop_keypoints: keep=" + std::to_string(keep) + " outside [1, " +
                                std::to_string(present) + "]");
  }
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    if (set.points[i].present()) slots.push_back(i);
  }
  // Partial Fisher-Yates: the first (present - keep) slots are dropped.
  KeypointSet out = set;
  const std::size_t drop = present - keep;
  for (std::size_t i = 0; i < drop; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, slots.size() - 1);
    std::swap(slots[i], slots[pick(rng)]);
    out.points[slots[i]].c = 0.0;
  }
  return out;
}

}  // namespace hhpnet
