#pragma once

// Pairwise "looking at each other" scoring from head centroids, projected head
// directions and per-head uncertainty gates, plus dataset-level metrics.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hhpnet/model.hpp"
#include "hhpnet/pose_geometry.hpp"

namespace hhpnet::laeo {

constexpr double kDefaultDelta = 7.0;
constexpr double kDefaultTau = 0.93;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct HeadInstance {
  std::string id;
  Point2 centroid;  // pixels
  PoseEstimate estimate;
};

/// Interval X on which the mean yaw/pitch log-variance counts as trusted.
enum class GateInterval {
  Closed,     // [0, delta]
  OpenBelow,  // (-inf, delta]
};

struct Gate {
  double delta = kDefaultDelta;
  GateInterval interval = GateInterval::Closed;

  /// A gate that trusts every finite estimate.
  static Gate disabled() { return {std::numeric_limits<double>::infinity(), GateInterval::OpenBelow}; }
};

/// 1 when 0.5 * (s_y + s_p) lies in the gate interval, else 0. Roll is ignored.
int uncertainty_weight(double s_yaw, double s_pitch, const Gate& gate = {});

struct Interaction {
  double cos_a = 0.0;  // angle between A's direction and A->B
  double cos_b = 0.0;  // angle between B's direction and B->A
};

/// Throws std::domain_error for coincident centroids or a zero projected direction.
Interaction interaction_measure(const HeadInstance& a, const HeadInstance& b);

/// (w_a * cos_a + w_b * cos_b) / (w_a + w_b); 0 when both weights are 0.
double laeo_value(const Interaction& measure, int w_a, int w_b);

/// value >= tau.
bool classify(double value, double tau = kDefaultTau);

struct LaeoResult {
  std::string id_a;
  std::string id_b;
  double cos_a = 0.0;
  double cos_b = 0.0;
  int w_a = 0;
  int w_b = 0;
  double value = 0.0;
  bool is_laeo = false;
};

/// Full pair evaluation. A head whose projected direction is zero (a perfectly
/// frontal pose) contributes cosine 0; coincident centroids still throw.
LaeoResult score_pair(const HeadInstance& a, const HeadInstance& b, double tau = kDefaultTau, const Gate& gate = {});

struct Frame {
  std::string frame_id;
  std::vector<HeadInstance> heads;
  std::vector<std::pair<std::string, std::string>> laeo_pairs;  // unordered ground-truth pairs
};

struct ScoredPair {
  std::size_t frame_index = 0;
  LaeoResult result;
  bool label = false;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap = 0.0;
  std::size_t pairs = 0;
  std::size_t positives = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

struct Report {
  std::vector<ScoredPair> pairs;
  Metrics metrics;
};

/// Every unordered head pair of every frame, in declaration order. Frames with
/// fewer than two heads contribute nothing. Throws std::invalid_argument when
/// a labeled pair references an undeclared head.
std::vector<ScoredPair> score_frames(std::span<const Frame> frames, double tau = kDefaultTau, const Gate& gate = {});

/// All-points interpolated area under the precision-recall curve of scores
/// ranked descending; tied scores enter the curve together. 0 with no positives.
double average_precision(std::span<const double> scores, const std::vector<bool>& labels);

Report evaluate_laeo(std::span<const Frame> frames, double tau = kDefaultTau, const Gate& gate = {});

}  // namespace hhpnet::laeo
