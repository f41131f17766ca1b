#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "arbfree/activations.hpp"
#include "arbfree/constraints.hpp"
#include "arbfree/datasets.hpp"
#include "arbfree/network.hpp"

namespace arbfree {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  friend bool operator==(const AdamOptions&, const AdamOptions&) = default;
};

struct TrainConfig {
  std::size_t epochs = 10000;
  AdamOptions adam;
  std::uint64_t seed = 0;
  std::vector<std::size_t> architecture{2, 16, 16, 1};
  Activation activation = Activation::softplus();
  PenaltyConfig penalty;
  std::size_t history_stride = 10;
  /// Run the mesh forward/backward pass even when every magnitude is zero.
  bool force_penalty_path = false;

  /// Throws ConfigError on epochs == 0, non-positive learning rate, bad
  /// Adam constants, stride == 0 or an invalid architecture.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Adam moments and step counter.
struct AdamState {
  ParamGradients m;
  ParamGradients v;
  std::size_t step = 0;

  static AdamState zeros_like(const MlpParams& params);
};

/// One bias-corrected Adam update of `params` in place.
/// Throws ConsistencyError when shapes of params, state and grads differ.
void adam_step(MlpParams& params, AdamState& state, const ParamGradients& grads,
               const AdamOptions& opt);

/// One strided history sample.
///
/// `e_penalty` is the baseline-magnitude penalty on the mesh (the same yardstick
/// for every training mode); `objective` is the loss actually minimized.
struct HistoryEntry {
  std::size_t epoch = 0;
  double e_mse = 0.0;
  double e_penalty = 0.0;
  double objective = 0.0;
};

struct TrainReport {
  MlpParams params;
  std::vector<HistoryEntry> history;
  LossReport final_report;  ///< training objective after the last step
  std::optional<AdaptiveWeights> adaptive_weights;
  double seconds = 0.0;
  std::size_t epochs = 0;
};

/// Called after every epoch (after the parameter and weight updates).
using EpochObserver =
    std::function<void(std::size_t epoch, const MlpParams& params, const AdaptiveWeights* weights)>;

/// Full-batch Adam on E_MSE(data) + E_P(mesh).
///
/// History is sampled at epochs 0, stride, 2 stride, ... (before that
/// epoch's update). `rate` enters only the optional lower-bound term.
/// Throws TrainingError on a non-finite loss.
TrainReport train(const QuoteGrid& data, const Mesh& mesh, const TrainConfig& cfg, double rate = 0.0,
                  const EpochObserver& observer = {});

/// `epoch,e_mse,e_penalty` rows.
std::string history_to_csv(const std::vector<HistoryEntry>& history);

}  // namespace arbfree
