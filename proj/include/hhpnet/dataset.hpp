#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hhpnet/keypoints.hpp"
#include "hhpnet/pose_geometry.hpp"

namespace hhpnet {

struct Sample {
  std::string id;
  KeypointSet keypoints;
  std::optional<EulerPose> pose;  // absent for inference-only records
  std::string meta = "{}";        // free-form JSON object, carried through untouched
};

using Dataset = std::vector<Sample>;

}  // namespace hhpnet
