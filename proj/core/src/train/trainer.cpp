#include "sdt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>

#include "sdt/ad/adam.hpp"
#include "sdt/common/error.hpp"

namespace sdt::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (steps < 1) throw UsageError("invalid train config: steps must be >= 1");
  if (batch_size < 1) throw UsageError("invalid train config: batch_size must be >= 1");
  if (!(lr > 0) || !std::isfinite(lr)) throw UsageError("invalid train config: lr must be > 0");
  if (!(grad_clip >= 0)) throw UsageError("invalid train config: grad_clip must be >= 0");
  policy.validate();
}

std::string to_json(const TrainConfig& c) {
  json j{{"steps", c.steps},         {"batch_size", c.batch_size}, {"lr", c.lr},
         {"grad_clip", c.grad_clip}, {"seed", c.seed},             {"safe_only", c.safe_only},
         {"eval_every", c.eval_every}, {"policy", json::parse(policy::to_json(c.policy))}};
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("train config is not valid JSON: ") + e.what());
  }
  try {
    c.steps = j.value("steps", c.steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.seed = j.value("seed", c.seed);
    c.safe_only = j.value("safe_only", c.safe_only);
    c.eval_every = j.value("eval_every", c.eval_every);
  } catch (const json::exception& e) {
    throw UsageError(std::string("train config field has the wrong type: ") + e.what());
  }
  if (j.contains("policy")) c.policy = policy::policy_config_from_json(j.at("policy").dump());
  c.validate();
  return c;
}

namespace {

void require_annotated(const data::Trajectory& t, std::size_t index) {
  if (!t.prefix || !t.suffix || !t.return_to_go) {
    throw DataError("trajectory " + std::to_string(index) +
                    " lacks prefix/suffix/rtg annotations (run annotate first)");
  }
}

}  // namespace

policy::InputScales input_scales(const data::OfflineDataset& dataset) {
  if (dataset.empty()) throw DataError("cannot derive input scales from an empty dataset");
  policy::InputScales s;
  const std::size_t channels = dataset.schema().size();
  std::vector<double> sum(channels, 0.0), sum_sq(channels, 0.0);
  std::size_t steps = 0;
  double reward_scale = 0.0, robustness_scale = 0.0;
  for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const auto& t = dataset.trajectories[i];
    require_annotated(t, i);
    for (std::size_t k = 0; k < t.states.size(); ++k) {
      sum[k % channels] += t.states[k];
      sum_sq[k % channels] += t.states[k] * t.states[k];
    }
    steps += t.length();
    reward_scale = std::max(reward_scale, std::fabs(t.return_to_go->front()));
    if (t.suffix->front() > 0) robustness_scale = std::max(robustness_scale, t.suffix->front());
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const double mean = sum[c] / static_cast<double>(steps);
    s.state_mean.push_back(mean);
    s.state_std.push_back(std::sqrt(std::max(0.0, sum_sq[c] / static_cast<double>(steps) - mean * mean)));
  }
  s.reward_scale = reward_scale > 1e-9 ? reward_scale : 1.0;
  s.robustness_scale = robustness_scale > 1e-9 ? robustness_scale : 1.0;
  return s;
}

std::vector<std::size_t> sampling_pool(const data::OfflineDataset& dataset, bool safe_only) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const auto& t = dataset.trajectories[i];
    require_annotated(t, i);
    if (!safe_only || t.suffix->front() > 0) pool.push_back(i);
  }
  return pool;
}

void fill_window(policy::TokenBatch& batch, std::size_t item, const data::Trajectory& t, std::size_t end) {
  const std::size_t k = batch.context, s = batch.state_dim, a = batch.action_dim;
  if (end < 1 || end > t.length()) throw UsageError("fill_window: end step out of range");
  if (t.schema.size() != s || t.action_dim != a) throw DataError("trajectory dims differ from the batch");
  const std::size_t first = end >= k ? end - k + 1 : 1;
  const std::size_t pad = k - (end - first + 1);
  double reward_prefix = 0.0;
  for (std::size_t u = 0; u + 1 < first; ++u) reward_prefix += t.rewards[u];
  for (std::size_t slot = 0; slot < k; ++slot) {
    const std::size_t i = batch.slot(item, slot);
    if (slot < pad) {
      batch.mask[i] = 0;
      batch.timesteps[i] = 0;
      batch.suffix[i] = batch.prefix[i] = batch.reward_prefix[i] = batch.return_to_go[i] = 0.0;
      std::fill_n(batch.states.begin() + static_cast<std::ptrdiff_t>(i * s), s, 0.0);
      std::fill_n(batch.actions.begin() + static_cast<std::ptrdiff_t>(i * a), a, 0.0);
      continue;
    }
    const std::size_t step = first + (slot - pad) - 1;  // 0-based
    batch.mask[i] = 1;
    batch.timesteps[i] = step;
    batch.suffix[i] = (*t.suffix)[step];
    batch.prefix[i] = (*t.prefix)[step];
    batch.reward_prefix[i] = reward_prefix;
    reward_prefix += t.rewards[step];
    batch.return_to_go[i] = (*t.return_to_go)[step];
    std::copy_n(t.states.begin() + static_cast<std::ptrdiff_t>(step * s), s,
                batch.states.begin() + static_cast<std::ptrdiff_t>(i * s));
    std::copy_n(t.actions.begin() + static_cast<std::ptrdiff_t>(step * a), a,
                batch.actions.begin() + static_cast<std::ptrdiff_t>(i * a));
  }
}

policy::TokenBatch sample_batch(const data::OfflineDataset& dataset, const std::vector<std::size_t>& pool,
                                std::size_t batch_size, std::size_t context, std::mt19937_64& rng) {
  if (pool.empty()) throw DataError("cannot sample a batch from an empty dataset");
  const auto& first = dataset.trajectories.at(pool.front());
  policy::TokenBatch batch(batch_size, context, first.schema.size(), first.action_dim);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t idx = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    const auto& t = dataset.trajectories[idx];
    require_annotated(t, idx);
    const std::size_t end = std::uniform_int_distribution<std::size_t>(1, t.length())(rng);
    fill_window(batch, b, t, end);
  }
  return batch;
}

namespace {

void clip_gradients(ad::ParameterStore& params, double max_norm) {
  if (max_norm <= 0) return;
  double sq = 0.0;
  for (const auto& [name, p] : params.items()) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double factor = max_norm / norm;
  for (auto& [name, p] : params.items()) {
    for (double& g : p.grad()) g *= factor;
  }
}

}  // namespace

TrainResult train(const data::OfflineDataset& dataset, const TrainConfig& config, std::ostream* loss_log,
                  const EvalHook& on_eval) {
  config.validate();
  const auto pool = sampling_pool(dataset, config.safe_only);
  if (pool.empty()) {
    throw DataError(config.safe_only ? "dataset has no safe trajectories to train on" : "dataset is empty");
  }
  policy::PolicyConfig pc = config.policy;
  const auto& schema = dataset.trajectories[pool.front()].schema;
  pc.state_dim = schema.size();
  pc.action_dim = dataset.trajectories[pool.front()].action_dim;
  for (const auto& t : dataset.trajectories) pc.max_timestep = std::max(pc.max_timestep, t.length());
  if (pc.scales.state_mean.empty()) pc.scales = input_scales(dataset);

  TrainResult result{policy::Policy(pc, config.seed), {}};
  auto& pol = result.policy;
  ad::Adam optimizer({.lr = config.lr});
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  if (loss_log) *loss_log << "step,loss,nll,entropy\n";
  result.history.reserve(config.steps);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const auto batch = sample_batch(dataset, pool, config.batch_size, pc.context, rng);
    pol.params().zero_grad();
    ad::Tape tape;
    policy::LossTerms terms;
    try {
      terms = pol.loss(tape, batch);
      tape.backward(terms.loss);
      clip_gradients(pol.params(), config.grad_clip);
      optimizer.step(pol.params());
    } catch (const NumericalError& e) {
      throw NumericalError("training step " + std::to_string(step) + ": " + e.what());
    }
    pol.clamp_log_std();
    const LossRecord rec{step, tape.item(terms.loss), terms.nll, terms.entropy};
    result.history.push_back(rec);
    if (loss_log) *loss_log << rec.step << ',' << rec.loss << ',' << rec.nll << ',' << rec.entropy << '\n';
    if (on_eval && config.eval_every > 0 && step % config.eval_every == 0) on_eval(step, pol);
  }
  pol.params().zero_grad();
  return result;
}

}  // namespace sdt::train
