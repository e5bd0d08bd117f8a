#include "hhpnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hhpnet {

namespace {

constexpr std::size_t kEvalBatch = 256;

void require_ground_truth(const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].pose) {
      throw std::invalid_argument("evaluate: sample " + std::to_string(i) + " (" + data[i].id + ") has no ground truth");
    }
  }
}

EvalResult finish(std::vector<EvalRecord> records) {
  std::vector<AngleErrors> errors;
  errors.reserve(records.size());
  for (const auto& r : records) errors.push_back(r.error);
  return {mae(errors), std::move(records)};
}

}  // namespace

EvalRecord make_record(const PoseEstimate& estimate, const EulerPose& gt, std::size_t present_keypoints) {
  return {estimate, gt, present_keypoints, estimate.mean_log_var(), angular_error(estimate.pose, gt)};
}

EvalResult evaluate(const Predictor& predictor, const Dataset& data) {
  require_ground_truth(data);
  std::vector<EvalRecord> records;
  records.reserve(data.size());
  for (const Sample& s : data) {
    records.push_back(make_record(predictor(s.keypoints), *s.pose, present_count(s.keypoints)));
  }
  return finish(std::move(records));
}

EvalResult evaluate(const ModelParams& params, const Dataset& data) {
  require_ground_truth(data);
  std::vector<EvalRecord> records;
  records.reserve(data.size());
  std::vector<NormalizedInput> inputs;
  for (std::size_t begin = 0; begin < data.size(); begin += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, data.size() - begin);
    inputs.clear();
    for (std::size_t i = begin; i < begin + count; ++i) inputs.push_back(normalize(data[i].keypoints));
    const auto estimates = forward_batch(params, inputs);
    for (std::size_t i = 0; i < count; ++i) {
      const Sample& s = data[begin + i];
      records.push_back(make_record(estimates[i], *s.pose, present_count(s.keypoints)));
    }
  }
  return finish(std::move(records));
}

double sigma_from_log_var(double s) { return std::exp(0.5 * s); }

std::vector<CurvePoint> cumulative_error_curve(std::span<const EvalRecord> records, std::span<const double> grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("cumulative_error_curve: grid must be sorted ascending");
  }
  std::vector<std::pair<double, double>> by_uncertainty;  // (uncertainty, error)
  by_uncertainty.reserve(records.size());
  for (const auto& r : records) by_uncertainty.emplace_back(r.mean_uncertainty, r.overall_error());
  std::sort(by_uncertainty.begin(), by_uncertainty.end());

  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  std::size_t taken = 0;
  double error_sum = 0.0;
  for (double u : grid) {
    while (taken < by_uncertainty.size() && by_uncertainty[taken].first <= u) {
      error_sum += by_uncertainty[taken].second;
      ++taken;
    }
    CurvePoint p{u, std::nullopt, 0.0, taken};
    if (taken > 0) p.mean_error = error_sum / static_cast<double>(taken);
    if (!records.empty()) p.retained_fraction = static_cast<double>(taken) / static_cast<double>(records.size());
    curve.push_back(p);
  }
  return curve;
}

std::vector<double> uncertainty_grid(std::span<const EvalRecord> records, std::size_t steps) {
  if (records.empty() || steps < 2) return {};
  double lo = records.front().mean_uncertainty, hi = lo;
  for (const auto& r : records) {
    lo = std::min(lo, r.mean_uncertainty);
    hi = std::max(hi, r.mean_uncertainty);
  }
  std::vector<double> grid(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  grid.back() = hi;
  return grid;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least two values");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("pearson: zero variance input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

UncertaintyCorrelation uncertainty_cross_correlation(std::span<const EvalRecord> records) {
  std::array<std::vector<double>, 3> s;
  for (const auto& r : records) {
    for (std::size_t i = 0; i < 3; ++i) s[i].push_back(r.estimate.log_var[i]);
  }
  return {pearson(s[0], s[1]), pearson(s[0], s[2]), pearson(s[1], s[2])};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty sample");
  std::vector<double> v(values.begin(), values.end());
  BoxStats b;
  b.min = *std::min_element(v.begin(), v.end());
  b.max = *std::max_element(v.begin(), v.end());
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  double sum = 0.0;
  for (double x : v) sum += x;
  b.mean = sum / static_cast<double>(v.size());
  return b;
}

std::map<std::size_t, KeypointGroup> error_by_keypoint_count(std::span<const EvalRecord> records) {
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> grouped;
  for (const auto& r : records) {
    auto& g = grouped[r.present_keypoints];
    g.first.push_back(r.overall_error());
    g.second.push_back(r.mean_uncertainty);
  }
  std::map<std::size_t, KeypointGroup> out;
  for (const auto& [count, g] : grouped) out[count] = {g.first.size(), box_stats(g.first), box_stats(g.second)};
  return out;
}

}  // namespace hhpnet
