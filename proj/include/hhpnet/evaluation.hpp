#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hhpnet/dataset.hpp"
#include "hhpnet/model.hpp"
#include "hhpnet/pose_geometry.hpp"

namespace hhpnet {

struct EvalRecord {
  PoseEstimate estimate;
  EulerPose ground_truth;
  std::size_t present_keypoints = 0;
  double mean_uncertainty = 0.0;  // mean of the three log-variances
  AngleErrors error{};

  /// Mean of the three per-angle absolute errors.
  double overall_error() const { return error.overall(); }
};

EvalRecord make_record(const PoseEstimate& estimate, const EulerPose& gt, std::size_t present_keypoints);

struct EvalResult {
  MaeSummary mae{};
  std::vector<EvalRecord> records;
};

using Predictor = std::function<PoseEstimate(const KeypointSet&)>;

/// Runs the predictor on every sample. Throws std::invalid_argument on an
/// empty dataset or a sample without ground truth.
EvalResult evaluate(const Predictor& predictor, const Dataset& data);
/// Batched network inference, same result as wrapping forward() in a Predictor.
EvalResult evaluate(const ModelParams& params, const Dataset& data);

/// sigma in degrees from a log-variance.
double sigma_from_log_var(double s);

struct CurvePoint {
  double threshold = 0.0;
  std::optional<double> mean_error;  // absent when no record is at or below the threshold
  double retained_fraction = 0.0;
  std::size_t count = 0;
};

/// For each threshold u: the mean overall error of records whose
/// mean_uncertainty <= u, and the fraction of records retained.
/// Throws std::invalid_argument when the grid is not sorted ascending.
std::vector<CurvePoint> cumulative_error_curve(std::span<const EvalRecord> records, std::span<const double> grid);

/// Evenly spaced grid spanning the observed mean uncertainties.
std::vector<double> uncertainty_grid(std::span<const EvalRecord> records, std::size_t steps);

/// Sample Pearson correlation. Throws std::invalid_argument for unequal
/// lengths, fewer than two values, or a zero-variance input.
double pearson(std::span<const double> a, std::span<const double> b);

struct UncertaintyCorrelation {
  double yaw_pitch = 0.0;
  double yaw_roll = 0.0;
  double pitch_roll = 0.0;
};

UncertaintyCorrelation uncertainty_cross_correlation(std::span<const EvalRecord> records);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

BoxStats box_stats(std::span<const double> values);

struct KeypointGroup {
  std::size_t count = 0;
  BoxStats error;
  BoxStats uncertainty;
};

/// Box-plot statistics of overall error and mean uncertainty grouped by the
/// number of present keypoints. Empty groups are absent from the map.
std::map<std::size_t, KeypointGroup> error_by_keypoint_count(std::span<const EvalRecord> records);

}  // namespace hhpnet
