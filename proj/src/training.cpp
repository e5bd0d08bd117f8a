#include "hhpnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "hhpnet/kernels.hpp"

namespace hhpnet {

namespace {

constexpr std::size_t kEvalBatch = 256;

struct Prepared {
  std::vector<NormalizedInput> inputs;
  std::vector<EulerPose> poses;
};

Prepared prepare(const Dataset& data, const char* split) {
  Prepared p;
  p.inputs.reserve(data.size());
  p.poses.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data[i];
    if (!s.pose) {
      throw std::invalid_argument(std::string(split) + " sample " + std::to_string(i) + " (" + s.id +
                                  ") has no ground-truth pose");
    }
    const auto a = s.pose->as_array();
    if (!std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); })) {
      throw std::invalid_argument(std::string(split) + " sample " + std::to_string(i) + " has a non-finite pose");
    }
    p.inputs.push_back(normalize(s.keypoints));
    p.poses.push_back(*s.pose);
  }
  return p;
}

struct SplitScore {
  double loss = 0.0;
  MaeSummary mae{};
};

SplitScore score(const ModelParams& params, const Prepared& data, LossKind loss, const LossOptions& options) {
  const std::size_t n = data.inputs.size();
  double loss_sum = 0.0;
  std::vector<AngleErrors> errors;
  errors.reserve(n);
  for (std::size_t begin = 0; begin < n; begin += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, n - begin);
    const std::span<const NormalizedInput> inputs(data.inputs.data() + begin, count);
    const std::span<const EulerPose> poses(data.poses.data() + begin, count);
    ad::Graph g;
    const GraphOutputs out = build_inference_graph(g, params, make_batch(inputs));
    const ad::Var l = batch_loss(g, loss, out, make_targets(poses, loss, options.bins), options);
    loss_sum += g.value(l)[0] * static_cast<double>(count);
    const auto estimates = decode(params.config, g.value(out.head));
    for (std::size_t i = 0; i < count; ++i) errors.push_back(angular_error(estimates[i].pose, poses[i]));
  }
  return {loss_sum / static_cast<double>(n), mae(errors)};
}

}  // namespace

void adam_step(std::span<ad::Parameter* const> params, AdamState& state, const AdamConfig& config) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const ad::Parameter* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
    state.step = 0;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : params[i]->grad.data()) {
      if (!std::isfinite(g)) throw TrainingError("adam_step: non-finite gradient in " + params[i]->name);
    }
  }
  const std::int64_t t = ++state.step;
  const kernels::AdamCoefficients k{config.learning_rate, config.beta1, config.beta2, config.epsilon,
                                    1.0 - std::pow(config.beta1, static_cast<double>(t)),
                                    1.0 - std::pow(config.beta2, static_cast<double>(t))};
  for (std::size_t i = 0; i < params.size(); ++i) {
    kernels::adam_update(params[i]->value.data(), params[i]->grad.data(), state.m[i].data(), state.v[i].data(), k);
  }
}

double dataset_loss(const ModelParams& params, const Dataset& data, LossKind loss, const LossOptions& options) {
  if (data.empty()) throw std::invalid_argument("dataset_loss: empty dataset");
  return score(params, prepare(data, "eval"), loss, options).loss;
}

TrainResult train(ModelConfig model_config, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train_set.empty() || val_set.empty()) throw std::invalid_argument("train: train and validation splits must be non-empty");
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");

  model_config.head = head_for(config.loss);
  model_config.n_bins = config.loss_options.bins.n_bins;
  const Prepared train_data = prepare(train_set, "train");
  const Prepared val_data = prepare(val_set, "validation");

  ModelParams params = build(model_config, config.seed);
  auto pointers = params.pointers();
  AdamState adam;
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  TrainResult result{params, {}};
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_data.inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<NormalizedInput> batch_inputs;
  std::vector<EulerPose> batch_poses;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t count = std::min(config.batch_size, order.size() - begin);
      batch_inputs.clear();
      batch_poses.clear();
      for (std::size_t i = begin; i < begin + count; ++i) {
        batch_inputs.push_back(train_data.inputs[order[i]]);
        batch_poses.push_back(train_data.poses[order[i]]);
      }
      params.zero_grad();
      ad::Graph g;
      const GraphOutputs out = build_graph(g, params, make_batch(batch_inputs));
      const ad::Var loss = batch_loss(g, config.loss, out, make_targets(batch_poses, config.loss, config.loss_options.bins),
                                      config.loss_options);
      const double value = g.value(loss)[0];
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      g.backward(loss);
      try {
        adam_step(pointers, adam, config.adam);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      epoch_loss += value * static_cast<double>(count);
    }

    const SplitScore val = score(params, val_data, config.loss, config.loss_options);
    if (!std::isfinite(val.loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    EpochRecord record{epoch, epoch_loss / static_cast<double>(order.size()), val.loss, val.mae};
    result.history.epochs.push_back(record);
    if (val.loss < best_loss) {
      best_loss = val.loss;
      result.history.best_index = result.history.epochs.size() - 1;
      result.params = params;
    }
    if (on_epoch) on_epoch(record);
  }
  result.params.zero_grad();
  return result;
}

}  // namespace hhpnet
