#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hhpnet/autodiff.hpp"
#include "hhpnet/model.hpp"
#include "hhpnet/pose_geometry.hpp"

namespace hhpnet {

struct LossValue {
  double total = 0.0;
  std::array<double, 3> per_angle{};  // yaw, pitch, roll
};

/// Uniform angle bins for the classification part of the combined loss.
struct BinningScheme {
  int n_bins = 66;
  double bin_width = 3.0;
  double low = -99.0;

  double high() const { return low + n_bins * bin_width; }
  /// Throws std::out_of_range for angles outside [low, high]; high maps to the last bin.
  std::size_t bin_of(double angle_deg) const;
};

enum class LossKind { Unc, Mse, Comb };

std::string_view loss_kind_name(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);
HeadKind head_for(LossKind kind);

/// Heteroscedastic loss: per angle 0.5 * exp(-s) * (q - f)^2 + 0.5 * s.
LossValue l_hhp(const PoseEstimate& pred, const EulerPose& gt);

/// Sum of squared angle residuals.
LossValue l_mse(const EulerPose& pred, const EulerPose& gt);

/// Per angle: cross-entropy of softmax(logits) against the bin of gt, plus
/// alpha * (q - f)^2. `logits` holds 3 blocks of n_bins scores (yaw, pitch, roll).
LossValue l_comb(const EulerPose& pred, std::span<const double> logits, const EulerPose& gt, double alpha = 1.0,
                 const BinningScheme& bins = {});

/// Largest per-angle gap between l_hhp and the Gaussian negative log
/// likelihood with variance exp(s), after removing its 0.5 * log(2 pi) constant.
double nll_equivalence_check(const PoseEstimate& pred, const EulerPose& gt);

/// Training targets for a batch.
struct BatchTargets {
  ad::Tensor angles;                             // [B, 3]
  std::vector<std::array<std::size_t, 3>> bins;  // filled for Comb only
};

BatchTargets make_targets(std::span<const EulerPose> poses, LossKind kind, const BinningScheme& bins = {});

struct LossOptions {
  double comb_alpha = 1.0;
  BinningScheme bins{};
};

/// Mean over the batch of the per-sample loss, as a single-element node.
ad::Var batch_loss(ad::Graph& graph, LossKind kind, const GraphOutputs& outputs, const BatchTargets& targets,
                   const LossOptions& options = {});

}  // namespace hhpnet
