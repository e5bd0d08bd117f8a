#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hhpnet/autodiff.hpp"
#include "hhpnet/keypoints.hpp"
#include "hhpnet/pose_geometry.hpp"

namespace hhpnet {

/// Which output head the network carries. The head follows the training loss.
enum class HeadKind {
  Uncertainty,    // 6 outputs: yaw, pitch, roll, s_yaw, s_pitch, s_roll
  AnglesOnly,     // 3 outputs
  AnglesAndBins,  // 3 outputs + 3 x n_bins classification logits from the last FC layer
};

std::string_view head_kind_name(HeadKind kind);
std::optional<HeadKind> parse_head_kind(std::string_view name);

struct ModelConfig {
  int n_keypoints = static_cast<int>(kNumKeypoints);
  int conv_filters = 5;
  int conv_kernel = 1;
  std::array<int, 3> fc_base{250, 200, 150};
  double alpha = 1.0;  // width reduction factor for the FC trunk
  double leaky_slope = 0.01;
  HeadKind head = HeadKind::Uncertainty;
  int n_bins = 66;  // only used by AnglesAndBins

  /// round-half-up(base * alpha), at least 1.
  std::array<int, 3> fc_sizes() const;
  int head_outputs() const { return head == HeadKind::Uncertainty ? 6 : 3; }
  /// Throws std::invalid_argument for a degenerate configuration.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Angles in degrees plus log-variances s = log(sigma^2), sigma in degrees.
/// Heads without uncertainty report s = 0.
struct PoseEstimate {
  EulerPose pose;
  std::array<double, 3> log_var{};

  double mean_log_var() const { return (log_var[0] + log_var[1] + log_var[2]) / 3.0; }
};

/// Parameter slots in serialization order.
enum class Slot : std::size_t {
  ConvX1W, ConvX1B, ConvX2W, ConvX2B, ConvCW, ConvCB,
  Fc1W, Fc1B, Fc2W, Fc2B, Fc3W, Fc3B,
  HeadW, HeadB,
  BinsW, BinsB,  // AnglesAndBins only
};

struct ModelParams {
  ModelConfig config;
  std::vector<ad::Parameter> tensors;

  ad::Parameter& operator[](Slot s) { return tensors.at(static_cast<std::size_t>(s)); }
  const ad::Parameter& operator[](Slot s) const { return tensors.at(static_cast<std::size_t>(s)); }

  std::vector<ad::Parameter*> pointers();
  std::size_t scalar_count() const;
  void zero_grad();
};

/// Shapes of every parameter tensor in slot order.
std::vector<ad::Shape> parameter_shapes(const ModelConfig& config);

/// Every weight and bias drawn i.i.d. from Normal(0, variance 0.05).
ModelParams build(const ModelConfig& config, std::uint64_t seed);

/// Zero-valued parameters of the right shapes.
ModelParams zeros(const ModelConfig& config);

std::size_t param_count(const ModelConfig& config);

/// Multiply-accumulates of one forward pass: conv streams, FC trunk and the
/// output head(s). Elementwise gating and activations are not counted.
std::size_t mult_add_count(const ModelConfig& config);

/// Batched network input: three [B, n] tensors.
struct BatchInput {
  ad::Tensor x1;
  ad::Tensor x2;
  ad::Tensor c;
};

BatchInput make_batch(std::span<const NormalizedInput> inputs);

struct GraphOutputs {
  ad::Var head;                 // [B, head_outputs]
  std::optional<ad::Var> bins;  // [B, 3 * n_bins]
};

/// Appends the network to `graph`. Parameters are bound by reference so
/// backward() accumulates into params[*].grad.
GraphOutputs build_graph(ad::Graph& graph, ModelParams& params, const BatchInput& input);

/// Same network with the parameters copied in as constants (no gradients).
GraphOutputs build_inference_graph(ad::Graph& graph, const ModelParams& params, const BatchInput& input);

/// Raw head rows converted to estimates.
std::vector<PoseEstimate> decode(const ModelConfig& config, const ad::Tensor& head);

PoseEstimate forward(const ModelParams& params, const NormalizedInput& input);
std::vector<PoseEstimate> forward_batch(const ModelParams& params, std::span<const NormalizedInput> inputs);

}  // namespace hhpnet
