#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hhpnet/autodiff.hpp"
#include "hhpnet/dataset.hpp"
#include "hhpnet/losses.hpp"
#include "hhpnet/model.hpp"

namespace hhpnet {

/// Raised when a loss or gradient stops being finite. what() names the epoch
/// and batch.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::int64_t step = 0;  // number of completed updates
};

/// Bias-corrected Adam update using each parameter's accumulated grad.
/// Moments are allocated on first use. Throws TrainingError on a non-finite gradient.
void adam_step(std::span<ad::Parameter* const> params, AdamState& state, const AdamConfig& config);

struct TrainConfig {
  AdamConfig adam{};
  std::size_t batch_size = 64;
  int epochs = 100;
  LossKind loss = LossKind::Unc;
  LossOptions loss_options{};
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  MaeSummary val_mae{};
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_index = 0;  // into epochs

  const EpochRecord& best() const { return epochs.at(best_index); }
};

struct TrainResult {
  ModelParams params;  // snapshot from the best validation epoch
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam training with per-epoch seeded shuffling. The last partial
/// batch is kept. The model head is forced to match config.loss.
/// Throws std::invalid_argument for empty splits or samples without ground truth.
TrainResult train(ModelConfig model_config, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean per-sample loss of `loss` over a dataset. Used for model selection.
double dataset_loss(const ModelParams& params, const Dataset& data, LossKind loss, const LossOptions& options = {});

}  // namespace hhpnet
