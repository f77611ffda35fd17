#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sdt/ad/parameters.hpp"
#include "sdt/ad/tape.hpp"

namespace sdt::policy {

enum class Modality { kSuffix, kPrefix, kRewardPrefix, kReturn, kState, kAction };

std::string to_string(Modality m);

/// Which conditioning tokens each timestep carries. States and actions are
/// always present; the order within a step is (suffix, prefix, reward prefix,
/// return-to-go, state, action) restricted to the enabled modalities.
struct TokenLayout {
  bool suffix = true;
  bool prefix = true;
  bool reward_prefix = false;
  bool return_to_go = true;

  std::vector<Modality> modalities() const;
  std::size_t tokens_per_step() const { return modalities().size(); }
  std::size_t position(Modality m) const;  // throws when m is disabled

  static TokenLayout sdt() { return {}; }
  static TokenLayout behavior_cloning() { return {false, false, false, false}; }

  friend bool operator==(const TokenLayout&, const TokenLayout&) = default;
};

enum class Architecture { kTransformer, kMlp };

/// Input normalization: states are standardized, returns divided by
/// reward_scale, robustness values divided by robustness_scale and clipped to
/// [-robustness_clip, robustness_clip] (empty temporal windows produce
/// values of +-rho_max).
struct InputScales {
  std::vector<double> state_mean;
  std::vector<double> state_std;
  double reward_scale = 1.0;
  double robustness_scale = 1.0;
  double robustness_clip = 10.0;

  friend bool operator==(const InputScales&, const InputScales&) = default;
};

struct PolicyConfig {
  Architecture architecture = Architecture::kTransformer;
  TokenLayout layout;
  std::size_t state_dim = 7;
  std::size_t action_dim = 2;
  std::size_t embed_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 1;
  std::size_t ffn_multiplier = 4;
  std::size_t context = 8;
  std::size_t max_timestep = 60;
  std::size_t mlp_hidden = 64;
  double action_bound = 1.0;
  double init_log_std = 0.0;
  double entropy_weight = 0.1;  // lambda
  InputScales scales;

  // Throws UsageError.
  void validate() const;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 2.0;

/// Context-window batch. Slot k of item b holds step values at index
/// b * context + k; windows shorter than the context are front-padded and the
/// padding slots have mask 0. `actions` are both the action tokens and the
/// prediction targets. Raw (unnormalized) values throughout.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t context = 0;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> suffix;
  std::vector<double> prefix;
  std::vector<double> reward_prefix;
  std::vector<double> return_to_go;
  std::vector<double> states;
  std::vector<double> actions;
  std::vector<std::size_t> timesteps;  // 0-based
  std::vector<std::uint8_t> mask;

  TokenBatch() = default;
  TokenBatch(std::size_t batch, std::size_t context, std::size_t state_dim, std::size_t action_dim);

  std::size_t slot(std::size_t item, std::size_t k) const { return item * context + k; }
  std::size_t real_steps() const;
  void check(const PolicyConfig& config) const;

  friend bool operator==(const TokenBatch&, const TokenBatch&) = default;
};

struct GaussianHead {
  ad::Var mean;     // [batch, context, action_dim]
  ad::Var log_std;  // [action_dim]
};

struct LossTerms {
  ad::Var loss;
  double nll = 0.0;      // mean over unmasked steps
  double entropy = 0.0;  // per-step entropy of the Gaussian
};

/// Diagonal Gaussian action policy: a causal transformer over interleaved
/// step tokens reading the action mean at each state token, or a two-layer
/// MLP applied to each step's conditioning independently. The log-std is a
/// global learnable vector.
class Policy {
 public:
  Policy(PolicyConfig config, std::uint64_t seed);
  Policy(PolicyConfig config, ad::ParameterStore params);

  const PolicyConfig& config() const { return config_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  GaussianHead forward(ad::Tape& tape, const TokenBatch& batch);

  /// Mean over unmasked steps of -log N(a; mu, sigma) - lambda * H.
  LossTerms loss(ad::Tape& tape, const TokenBatch& batch);

  /// Action mean and std at slot `k` of every item, without recording gradients.
  struct Prediction {
    std::vector<double> mean;  // [batch, action_dim]
    std::vector<double> std;   // [action_dim]
  };
  Prediction predict(const TokenBatch& batch, std::size_t k);

  void clamp_log_std();

 private:
  void init_transformer(std::mt19937_64& rng);
  void init_mlp(std::mt19937_64& rng);
  void check_params() const;
  ad::Var transformer(ad::Tape& tape, const TokenBatch& batch);
  ad::Var mlp(ad::Tape& tape, const TokenBatch& batch);
  ad::Var linear(ad::Tape& tape, ad::Var x, const std::string& name);
  ad::Var affine_norm(ad::Tape& tape, ad::Var x, const std::string& name);
  std::vector<double> scaled_scalar(const std::vector<double>& raw, bool robustness,
                                    const TokenBatch& batch) const;
  std::vector<double> scaled_states(const TokenBatch& batch) const;

  PolicyConfig config_;
  ad::ParameterStore params_;
};

/// Checkpoint = parameter file at `path` plus a JSON sidecar at
/// `path + ".meta.json"` holding the config and `extra` metadata.
struct CheckpointMeta {
  std::string env;
  std::string spec;
  std::string extra;  // free-form JSON text (e.g. the training config)
};

void save_checkpoint(const Policy& policy, const CheckpointMeta& meta, const std::string& path);
Policy load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

std::string to_json(const PolicyConfig& config);
PolicyConfig policy_config_from_json(const std::string& text);

}  // namespace sdt::policy
