#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sdt/data/dataset.hpp"
#include "sdt/policy/policy.hpp"

namespace sdt::train {

struct TrainConfig {
  std::size_t steps = 20000;
  std::size_t batch_size = 64;
  double lr = 1e-4;
  double grad_clip = 1.0;  // global L2 norm; 0 disables
  std::uint64_t seed = 0;
  bool safe_only = false;  // train on trajectories with rho > 0 only
  std::size_t eval_every = 0;
  policy::PolicyConfig policy;  // context, sizes, layout, lambda

  // Throws UsageError.
  void validate() const;
};

std::string to_json(const TrainConfig& config);
/// Fields absent from the JSON keep their defaults.
TrainConfig train_config_from_json(const std::string& text);

/// Input scales from an annotated dataset: per-channel state mean/std,
/// reward scale = largest |R_1|, robustness scale = largest safe rho (1 when
/// there is no safe trajectory).
policy::InputScales input_scales(const data::OfflineDataset& dataset);

/// Trajectory indices usable for sampling: all, or those whose annotated
/// suffix at t = 1 is positive.
std::vector<std::size_t> sampling_pool(const data::OfflineDataset& dataset, bool safe_only);

/// Uniform (trajectory, end step) pairs from `pool`; each window holds the
/// context-length steps ending at the sampled step, front-padded. Throws
/// DataError for an empty pool or unannotated trajectories.
policy::TokenBatch sample_batch(const data::OfflineDataset& dataset, const std::vector<std::size_t>& pool,
                                std::size_t batch_size, std::size_t context, std::mt19937_64& rng);

/// Copies steps [end - context + 1, end] (1-indexed, clipped at 1) of one
/// trajectory into item `item` of the batch. The reward-prefix token of step t
/// is the sum of rewards before t, so that R_pre(t) + R(t) equals the total.
void fill_window(policy::TokenBatch& batch, std::size_t item, const data::Trajectory& trajectory,
                 std::size_t end);

struct LossRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double nll = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  policy::Policy policy;
  std::vector<LossRecord> history;
};

using EvalHook = std::function<void(std::size_t step, policy::Policy& policy)>;

/// sample_batch -> loss -> backward -> Adam for config.steps iterations; the
/// log-std is clamped after every update. Writes "step,loss,nll,entropy" rows
/// to `loss_log` when given. Throws NumericalError naming the step when the
/// loss or a gradient is not finite.
TrainResult train(const data::OfflineDataset& dataset, const TrainConfig& config,
                  std::ostream* loss_log = nullptr, const EvalHook& on_eval = {});

}  // namespace sdt::train
