#include "hhpnet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hhpnet {

std::size_t BinningScheme::bin_of(double angle_deg) const {
  if (!(angle_deg >= low && angle_deg <= high())) {
    throw std::out_of_range("angle " + std::to_string(angle_deg) + " outside binning range [" + std::to_string(low) +
                            ", " + std::to_string(high()) + "]");
  }
  const auto bin = static_cast<std::size_t>(std::floor((angle_deg - low) / bin_width));
  return std::min(bin, static_cast<std::size_t>(n_bins - 1));
}

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Unc: return "unc";
    case LossKind::Mse: return "mse";
    case LossKind::Comb: return "comb";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::Unc, LossKind::Mse, LossKind::Comb}) {
    if (loss_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

HeadKind head_for(LossKind kind) {
  switch (kind) {
    case LossKind::Unc: return HeadKind::Uncertainty;
    case LossKind::Mse: return HeadKind::AnglesOnly;
    case LossKind::Comb: return HeadKind::AnglesAndBins;
  }
  return HeadKind::Uncertainty;
}

LossValue l_hhp(const PoseEstimate& pred, const EulerPose& gt) {
  const auto q = gt.as_array();
  const auto f = pred.pose.as_array();
  LossValue out;
  for (std::size_t i = 0; i < 3; ++i) {
    const double r = q[i] - f[i];
    const double s = pred.log_var[i];
    out.per_angle[i] = 0.5 * std::exp(-s) * r * r + 0.5 * s;
    out.total += out.per_angle[i];
  }
  return out;
}

LossValue l_mse(const EulerPose& pred, const EulerPose& gt) {
  const auto q = gt.as_array();
  const auto f = pred.as_array();
  LossValue out;
  for (std::size_t i = 0; i < 3; ++i) {
    const double r = q[i] - f[i];
    out.per_angle[i] = r * r;
    out.total += out.per_angle[i];
  }
  return out;
}

LossValue l_comb(const EulerPose& pred, std::span<const double> logits, const EulerPose& gt, double alpha,
                 const BinningScheme& bins) {
  const auto nb = static_cast<std::size_t>(bins.n_bins);
  if (logits.size() != 3 * nb) {
    throw std::invalid_argument("l_comb: expected " + std::to_string(3 * nb) + " logits, got " +
                                std::to_string(logits.size()));
  }
  const auto q = gt.as_array();
  const auto f = pred.as_array();
  LossValue out;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto z = logits.subspan(i * nb, nb);
    const std::size_t label = bins.bin_of(q[i]);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double ce = -(z[label] - zmax - std::log(denom));
    const double r = q[i] - f[i];
    out.per_angle[i] = ce + alpha * r * r;
    out.total += out.per_angle[i];
  }
  return out;
}

double nll_equivalence_check(const PoseEstimate& pred, const EulerPose& gt) {
  const LossValue hhp = l_hhp(pred, gt);
  const auto q = gt.as_array();
  const auto f = pred.pose.as_array();
  const double half_log_2pi = 0.5 * std::log(2.0 * kPi);
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double variance = std::exp(pred.log_var[i]);
    const double r = q[i] - f[i];
    const double nll = r * r / (2.0 * variance) + 0.5 * std::log(variance) + half_log_2pi;
    worst = std::max(worst, std::abs(hhp.per_angle[i] - (nll - half_log_2pi)));
  }
  return worst;
}

BatchTargets make_targets(std::span<const EulerPose> poses, LossKind kind, const BinningScheme& bins) {
  BatchTargets t{ad::Tensor({poses.size(), 3}), {}};
  for (std::size_t r = 0; r < poses.size(); ++r) {
    const auto a = poses[r].as_array();
    for (std::size_t i = 0; i < 3; ++i) t.angles.at(r, i) = a[i];
    if (kind == LossKind::Comb) t.bins.push_back({bins.bin_of(a[0]), bins.bin_of(a[1]), bins.bin_of(a[2])});
  }
  return t;
}

ad::Var batch_loss(ad::Graph& g, LossKind kind, const GraphOutputs& outputs, const BatchTargets& targets,
                   const LossOptions& options) {
  const ad::Tensor& head = g.value(outputs.head);
  const std::size_t rows = head.dim(0);
  if (targets.angles.shape() != ad::Shape{rows, 3}) {
    throw ad::ShapeError("batch_loss: targets " + ad::shape_string(targets.angles.shape()) + " for " +
                         std::to_string(rows) + " rows");
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const ad::Var q = g.slice_cols(outputs.head, 0, 3);
  const ad::Var residual = g.sub(q, g.input(targets.angles));
  const ad::Var sq = g.square(residual);

  switch (kind) {
    case LossKind::Mse: return g.scale(g.sum(sq), inv_rows);
    case LossKind::Unc: {
      if (head.dim(1) != 6) throw ad::ShapeError("batch_loss: UNC loss needs the 6-output head");
      const ad::Var s = g.slice_cols(outputs.head, 3, 6);
      const ad::Var weighted = g.mul(g.exp(g.scale(s, -1.0)), sq);
      const ad::Var per = g.add(g.scale(weighted, 0.5), g.scale(s, 0.5));
      return g.scale(g.sum(per), inv_rows);
    }
    case LossKind::Comb: {
      if (!outputs.bins) throw ad::ShapeError("batch_loss: COMB loss needs the classification head");
      if (targets.bins.size() != rows) throw ad::ShapeError("batch_loss: missing bin labels");
      const auto nb = static_cast<std::size_t>(options.bins.n_bins);
      if (g.value(*outputs.bins).dim(1) != 3 * nb) throw ad::ShapeError("batch_loss: bin head width mismatch");
      ad::Var total = g.scale(g.sum(sq), options.comb_alpha);
      for (std::size_t i = 0; i < 3; ++i) {
        std::vector<std::size_t> labels(rows);
        for (std::size_t r = 0; r < rows; ++r) labels[r] = targets.bins[r][i];
        const ad::Var logits = g.slice_cols(*outputs.bins, i * nb, (i + 1) * nb);
        total = g.add(total, g.sum(g.softmax_cross_entropy(logits, std::move(labels))));
      }
      return g.scale(total, inv_rows);
    }
  }
  throw std::invalid_argument("batch_loss: unknown loss kind");
}

}  // namespace hhpnet
