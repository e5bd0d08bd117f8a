#include "hhpnet/model.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace hhpnet {

namespace {

constexpr double kInitVariance = 0.05;

GraphOutputs assemble(ad::Graph& g, const ModelConfig& config, const BatchInput& input,
                      const std::function<ad::Var(Slot)>& bind) {
  const double slope = config.leaky_slope;
  auto stream = [&](const ad::Tensor& x, Slot w, Slot b) { return g.conv1d(g.input(x), bind(w), bind(b)); };

  const ad::Var x1 = g.flatten(g.leaky_relu(stream(input.x1, Slot::ConvX1W, Slot::ConvX1B), slope));
  const ad::Var x2 = g.flatten(g.leaky_relu(stream(input.x2, Slot::ConvX2W, Slot::ConvX2B), slope));
  const ad::Var c = g.flatten(g.sigmoid(stream(input.c, Slot::ConvCW, Slot::ConvCB)));

  ad::Var h = g.concat(g.mul(x1, c), g.mul(x2, c));
  h = g.leaky_relu(g.dense(h, bind(Slot::Fc1W), bind(Slot::Fc1B)), slope);
  h = g.leaky_relu(g.dense(h, bind(Slot::Fc2W), bind(Slot::Fc2B)), slope);
  h = g.leaky_relu(g.dense(h, bind(Slot::Fc3W), bind(Slot::Fc3B)), slope);

  GraphOutputs out{g.dense(h, bind(Slot::HeadW), bind(Slot::HeadB)), std::nullopt};
  if (config.head == HeadKind::AnglesAndBins) out.bins = g.dense(h, bind(Slot::BinsW), bind(Slot::BinsB));
  return out;
}

}  // namespace

std::string_view head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::Uncertainty: return "uncertainty";
    case HeadKind::AnglesOnly: return "angles";
    case HeadKind::AnglesAndBins: return "angles_bins";
  }
  return "unknown";
}

std::optional<HeadKind> parse_head_kind(std::string_view name) {
  for (HeadKind k : {HeadKind::Uncertainty, HeadKind::AnglesOnly, HeadKind::AnglesAndBins}) {
    if (head_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::array<int, 3> ModelConfig::fc_sizes() const {
  std::array<int, 3> sizes{};
  for (std::size_t i = 0; i < 3; ++i) {
    sizes[i] = std::max(1, static_cast<int>(std::floor(fc_base[i] * alpha + 0.5)));
  }
  return sizes;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid model config: " + what); };
  if (n_keypoints != static_cast<int>(kNumKeypoints)) fail("n_keypoints must be 5");
  if (conv_filters < 1) fail("conv_filters must be >= 1");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) fail("conv_kernel must be a positive odd integer");
  if (conv_kernel > n_keypoints) fail("conv_kernel exceeds the number of keypoints");
  for (int b : fc_base) {
    if (b < 1) fail("fc sizes must be >= 1");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must lie in (0, 1]");
  if (!(leaky_slope > 0.0)) fail("leaky_slope must be positive");
  if (head == HeadKind::AnglesAndBins && n_bins < 2) fail("n_bins must be >= 2");
}

std::vector<ad::Parameter*> ModelParams::pointers() {
  std::vector<ad::Parameter*> out;
  out.reserve(tensors.size());
  for (auto& t : tensors) out.push_back(&t);
  return out;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.value.size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& t : tensors) t.zero_grad();
}

std::vector<ad::Shape> parameter_shapes(const ModelConfig& config) {
  config.validate();
  const auto fc = config.fc_sizes();
  const std::size_t f = static_cast<std::size_t>(config.conv_filters);
  const std::size_t k = static_cast<std::size_t>(config.conv_kernel);
  const std::size_t gated = 2 * static_cast<std::size_t>(config.n_keypoints) * f;
  const std::size_t h1 = static_cast<std::size_t>(fc[0]), h2 = static_cast<std::size_t>(fc[1]),
                    h3 = static_cast<std::size_t>(fc[2]);
  const std::size_t outs = static_cast<std::size_t>(config.head_outputs());
  std::vector<ad::Shape> shapes{
      {f, k}, {f}, {f, k}, {f}, {f, k}, {f},
      {gated, h1}, {h1}, {h1, h2}, {h2}, {h2, h3}, {h3},
      {h3, outs}, {outs},
  };
  if (config.head == HeadKind::AnglesAndBins) {
    const std::size_t bins = 3 * static_cast<std::size_t>(config.n_bins);
    shapes.push_back({h3, bins});
    shapes.push_back({bins});
  }
  return shapes;
}

namespace {

const char* slot_name(std::size_t i) {
  static const char* names[] = {"conv_x1.w", "conv_x1.b", "conv_x2.w", "conv_x2.b", "conv_c.w", "conv_c.b",
                                "fc1.w",     "fc1.b",     "fc2.w",     "fc2.b",     "fc3.w",    "fc3.b",
                                "head.w",    "head.b",    "bins.w",    "bins.b"};
  return names[i];
}

}  // namespace

ModelParams zeros(const ModelConfig& config) {
  ModelParams params{config, {}};
  const auto shapes = parameter_shapes(config);
  for (std::size_t i = 0; i < shapes.size(); ++i) params.tensors.emplace_back(slot_name(i), ad::Tensor(shapes[i]));
  return params;
}

ModelParams build(const ModelConfig& config, std::uint64_t seed) {
  ModelParams params = zeros(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(kInitVariance));
  for (auto& t : params.tensors) {
    for (double& v : t.value.data()) v = normal(rng);
  }
  return params;
}

std::size_t param_count(const ModelConfig& config) {
  std::size_t n = 0;
  for (const auto& s : parameter_shapes(config)) {
    std::size_t p = 1;
    for (std::size_t d : s) p *= d;
    n += p;
  }
  return n;
}

std::size_t mult_add_count(const ModelConfig& config) {
  config.validate();
  const auto fc = config.fc_sizes();
  const std::size_t n = static_cast<std::size_t>(config.n_keypoints);
  const std::size_t f = static_cast<std::size_t>(config.conv_filters);
  const std::size_t k = static_cast<std::size_t>(config.conv_kernel);
  const std::size_t h1 = static_cast<std::size_t>(fc[0]), h2 = static_cast<std::size_t>(fc[1]),
                    h3 = static_cast<std::size_t>(fc[2]);
  std::size_t total = 3 * n * f * k;
  total += 2 * n * f * h1 + h1 * h2 + h2 * h3;
  total += h3 * static_cast<std::size_t>(config.head_outputs());
  if (config.head == HeadKind::AnglesAndBins) total += h3 * 3 * static_cast<std::size_t>(config.n_bins);
  return total;
}

BatchInput make_batch(std::span<const NormalizedInput> inputs) {
  const std::size_t rows = inputs.size();
  BatchInput b{ad::Tensor({rows, kNumKeypoints}), ad::Tensor({rows, kNumKeypoints}), ad::Tensor({rows, kNumKeypoints})};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      b.x1.at(r, i) = inputs[r].x1[i];
      b.x2.at(r, i) = inputs[r].x2[i];
      b.c.at(r, i) = inputs[r].c[i];
    }
  }
  return b;
}

GraphOutputs build_graph(ad::Graph& graph, ModelParams& params, const BatchInput& input) {
  return assemble(graph, params.config, input, [&](Slot s) { return graph.param(params[s]); });
}

GraphOutputs build_inference_graph(ad::Graph& graph, const ModelParams& params, const BatchInput& input) {
  return assemble(graph, params.config, input, [&](Slot s) { return graph.input(params[s].value); });
}

std::vector<PoseEstimate> decode(const ModelConfig& config, const ad::Tensor& head) {
  const std::size_t rows = head.dim(0);
  std::vector<PoseEstimate> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = head.row(r);
    out[r].pose = {v[0], v[1], v[2]};
    if (config.head == HeadKind::Uncertainty) out[r].log_var = {v[3], v[4], v[5]};
  }
  return out;
}

std::vector<PoseEstimate> forward_batch(const ModelParams& params, std::span<const NormalizedInput> inputs) {
  if (inputs.empty()) return {};
  ad::Graph g;
  const GraphOutputs out = build_inference_graph(g, params, make_batch(inputs));
  return decode(params.config, g.value(out.head));
}

PoseEstimate forward(const ModelParams& params, const NormalizedInput& input) {
  return forward_batch(params, std::span<const NormalizedInput>(&input, 1)).front();
}

}  // namespace hhpnet
