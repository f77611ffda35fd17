#include "sdt/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "sdt/common/error.hpp"

namespace sdt::policy {

using ad::Array;
using ad::Shape;
using ad::Tape;
using ad::Var;
using nlohmann::json;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

std::string modality_key(Modality m) {
  switch (m) {
    case Modality::kSuffix:
      return "suffix";
    case Modality::kPrefix:
      return "prefix";
    case Modality::kRewardPrefix:
      return "reward_prefix";
    case Modality::kReturn:
      return "rtg";
    case Modality::kState:
      return "state";
    case Modality::kAction:
      return "action";
  }
  return "state";
}

}  // namespace

std::string to_string(Modality m) { return modality_key(m); }

std::vector<Modality> TokenLayout::modalities() const {
  std::vector<Modality> out;
  if (suffix) out.push_back(Modality::kSuffix);
  if (prefix) out.push_back(Modality::kPrefix);
  if (reward_prefix) out.push_back(Modality::kRewardPrefix);
  if (return_to_go) out.push_back(Modality::kReturn);
  out.push_back(Modality::kState);
  out.push_back(Modality::kAction);
  return out;
}

std::size_t TokenLayout::position(Modality m) const {
  const auto mods = modalities();
  auto it = std::find(mods.begin(), mods.end(), m);
  if (it == mods.end()) throw UsageError("token '" + to_string(m) + "' is not in the layout");
  return static_cast<std::size_t>(it - mods.begin());
}

void PolicyConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid policy config: " + what);
  };
  require(state_dim > 0 && action_dim > 0, "state_dim and action_dim must be positive");
  require(embed_dim > 0 && heads > 0 && embed_dim % heads == 0, "embed_dim must be a positive multiple of heads");
  require(context >= 1, "context must be >= 1");
  require(max_timestep >= 1, "max_timestep must be >= 1");
  require(ffn_multiplier >= 1 && mlp_hidden >= 1, "hidden sizes must be positive");
  require(action_bound > 0, "action_bound must be > 0");
  require(std::isfinite(entropy_weight) && entropy_weight >= 0, "entropy_weight must be >= 0");
  require(init_log_std >= kMinLogStd && init_log_std <= kMaxLogStd, "init_log_std outside [-5, 2]");
  require(scales.reward_scale > 0 && scales.robustness_scale > 0 && scales.robustness_clip > 0,
          "scales must be positive");
  require(scales.state_mean.empty() || scales.state_mean.size() == state_dim, "state_mean size");
  require(scales.state_std.empty() || scales.state_std.size() == state_dim, "state_std size");
}

TokenBatch::TokenBatch(std::size_t b, std::size_t k, std::size_t s, std::size_t a)
    : batch(b),
      context(k),
      state_dim(s),
      action_dim(a),
      suffix(b * k, 0.0),
      prefix(b * k, 0.0),
      reward_prefix(b * k, 0.0),
      return_to_go(b * k, 0.0),
      states(b * k * s, 0.0),
      actions(b * k * a, 0.0),
      timesteps(b * k, 0),
      mask(b * k, 0) {}

std::size_t TokenBatch::real_steps() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

void TokenBatch::check(const PolicyConfig& config) const {
  const std::size_t n = batch * context;
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ad::ShapeError("token batch: " + what);
  };
  require(batch > 0 && context > 0, "empty batch");
  require(context == config.context, "context " + std::to_string(context) + " vs policy context " +
                                         std::to_string(config.context));
  require(state_dim == config.state_dim && action_dim == config.action_dim, "state/action dims differ from policy");
  require(suffix.size() == n && prefix.size() == n && reward_prefix.size() == n && return_to_go.size() == n &&
              timesteps.size() == n && mask.size() == n,
          "per-step arrays must have batch*context entries");
  require(states.size() == n * state_dim && actions.size() == n * action_dim, "state/action arrays sized wrong");
  for (auto t : timesteps) {
    require(t < config.max_timestep, "timestep " + std::to_string(t) + " >= max_timestep");
  }
}

Policy::Policy(PolicyConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  if (config_.architecture == Architecture::kTransformer) {
    init_transformer(rng);
  } else {
    init_mlp(rng);
  }
  params_.add("log_std", Array({config_.action_dim}, config_.init_log_std, true));
}

Policy::Policy(PolicyConfig config, ad::ParameterStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  check_params();
}

void Policy::check_params() const {
  Policy reference(config_, 0);
  for (const auto& [name, p] : reference.params_.items()) {
    if (!params_.contains(name)) throw DataError("checkpoint lacks parameter '" + name + "'");
    if (params_.at(name).shape() != p.shape()) {
      throw DataError("parameter '" + name + "' has shape " + ad::to_string(params_.at(name).shape()) +
                      ", config expects " + ad::to_string(p.shape()));
    }
  }
  if (params_.items().size() != reference.params_.items().size()) {
    throw DataError("checkpoint has parameters the config does not use");
  }
}

namespace {

void add_linear(ad::ParameterStore& ps, const std::string& name, std::size_t in, std::size_t out,
                std::mt19937_64& rng, bool zero = false) {
  if (zero) {
    ps.add(name + ".w", Array({in, out}, 0.0, true));
  } else {
    ps.add(name + ".w", ad::normal_array({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
  }
  ps.add(name + ".b", Array({out}, 0.0, true));
}

void add_norm(ad::ParameterStore& ps, const std::string& name, std::size_t d) {
  ps.add(name + ".g", Array({d}, 1.0, true));
  ps.add(name + ".b", Array({d}, 0.0, true));
}

}  // namespace

void Policy::init_transformer(std::mt19937_64& rng) {
  const std::size_t d = config_.embed_dim;
  for (Modality m : config_.layout.modalities()) {
    const std::size_t in = m == Modality::kState ? config_.state_dim
                           : m == Modality::kAction ? config_.action_dim
                                                    : 1;
    add_linear(params_, "embed." + modality_key(m), in, d, rng);
  }
  params_.add("embed.time", ad::normal_array({config_.max_timestep, d}, 0.1, rng));
  add_norm(params_, "embed.norm", d);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "block" + std::to_string(l);
    add_norm(params_, p + ".norm1", d);
    for (const char* w : {".attn.q", ".attn.k", ".attn.v"}) {
      params_.add(p + w + ".w", ad::normal_array({d, d}, 1.0 / std::sqrt(static_cast<double>(d)), rng));
    }
    add_linear(params_, p + ".attn.out", d, d, rng);
    add_norm(params_, p + ".norm2", d);
    add_linear(params_, p + ".ffn.in", d, d * config_.ffn_multiplier, rng);
    add_linear(params_, p + ".ffn.out", d * config_.ffn_multiplier, d, rng);
  }
  add_norm(params_, "final.norm", d);
  add_linear(params_, "head", d, config_.action_dim, rng, true);
}

void Policy::init_mlp(std::mt19937_64& rng) {
  std::size_t in = config_.state_dim;
  for (Modality m : config_.layout.modalities()) {
    if (m != Modality::kState && m != Modality::kAction) ++in;
  }
  add_linear(params_, "mlp.l1", in, config_.mlp_hidden, rng);
  add_linear(params_, "mlp.l2", config_.mlp_hidden, config_.mlp_hidden, rng);
  add_linear(params_, "head", config_.mlp_hidden, config_.action_dim, rng, true);
}

Var Policy::linear(Tape& tape, Var x, const std::string& name) {
  Var y = tape.matmul(x, tape.parameter(params_.at(name + ".w")));
  if (params_.contains(name + ".b")) y = tape.add(y, tape.parameter(params_.at(name + ".b")));
  return y;
}

Var Policy::affine_norm(Tape& tape, Var x, const std::string& name) {
  const Var n = tape.layer_norm(x);
  return tape.add(tape.mul(n, tape.parameter(params_.at(name + ".g"))), tape.parameter(params_.at(name + ".b")));
}

std::vector<double> Policy::scaled_scalar(const std::vector<double>& raw, bool robustness,
                                          const TokenBatch& batch) const {
  const auto& s = config_.scales;
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!batch.mask[i]) continue;
    out[i] = robustness ? std::clamp(raw[i] / s.robustness_scale, -s.robustness_clip, s.robustness_clip)
                        : raw[i] / s.reward_scale;
  }
  return out;
}

std::vector<double> Policy::scaled_states(const TokenBatch& batch) const {
  const auto& s = config_.scales;
  const std::size_t dim = config_.state_dim;
  std::vector<double> out(batch.states.size());
  for (std::size_t i = 0; i < batch.states.size(); ++i) {
    if (!batch.mask[i / dim]) continue;
    const std::size_t c = i % dim;
    const double mean = s.state_mean.empty() ? 0.0 : s.state_mean[c];
    const double sd = s.state_std.empty() || s.state_std[c] < 1e-6 ? 1.0 : s.state_std[c];
    out[i] = (batch.states[i] - mean) / sd;
  }
  return out;
}

Var Policy::transformer(Tape& tape, const TokenBatch& batch) {
  const std::size_t b = batch.batch, k = batch.context, d = config_.embed_dim;
  const auto mods = config_.layout.modalities();
  const std::size_t g = mods.size(), seq = k * g;

  const Var time = tape.gather(tape.parameter(params_.at("embed.time")), batch.timesteps, {b, k});
  std::vector<Var> tokens;
  for (Modality m : mods) {
    Var input;
    switch (m) {
      case Modality::kSuffix:
        input = tape.constant({b, k, 1}, scaled_scalar(batch.suffix, true, batch));
        break;
      case Modality::kPrefix:
        input = tape.constant({b, k, 1}, scaled_scalar(batch.prefix, true, batch));
        break;
      case Modality::kRewardPrefix:
        input = tape.constant({b, k, 1}, scaled_scalar(batch.reward_prefix, false, batch));
        break;
      case Modality::kReturn:
        input = tape.constant({b, k, 1}, scaled_scalar(batch.return_to_go, false, batch));
        break;
      case Modality::kState:
        input = tape.constant({b, k, config_.state_dim}, scaled_states(batch));
        break;
      case Modality::kAction: {
        std::vector<double> a(batch.actions.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          a[i] = batch.mask[i / config_.action_dim] ? batch.actions[i] / config_.action_bound : 0.0;
        }
        input = tape.constant({b, k, config_.action_dim}, std::move(a));
        break;
      }
    }
    tokens.push_back(tape.add(linear(tape, input, "embed." + modality_key(m)), time));
  }
  Var x = tape.reshape(tape.concat(tokens), {b, seq, d});
  x = affine_norm(tape, x, "embed.norm");

  // Causal mask; padding tokens are visible only to themselves.
  std::vector<std::uint8_t> mask(b * seq * seq, 0);
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t i = 0; i < seq; ++i) {
      for (std::size_t j = 0; j < seq; ++j) {
        mask[(bi * seq + i) * seq + j] = j > i || (j != i && !batch.mask[bi * k + j / g]);
      }
    }
  }

  const std::size_t heads = config_.heads, dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "block" + std::to_string(l);
    const Var h = affine_norm(tape, x, p + ".norm1");
    const Var q = tape.matmul(h, tape.parameter(params_.at(p + ".attn.q.w")));
    const Var kk = tape.matmul(h, tape.parameter(params_.at(p + ".attn.k.w")));
    const Var v = tape.matmul(h, tape.parameter(params_.at(p + ".attn.v.w")));
    std::vector<Var> outs;
    for (std::size_t hi = 0; hi < heads; ++hi) {
      const Var qh = heads == 1 ? q : tape.slice(q, hi * dh, (hi + 1) * dh);
      const Var kh = heads == 1 ? kk : tape.slice(kk, hi * dh, (hi + 1) * dh);
      const Var vh = heads == 1 ? v : tape.slice(v, hi * dh, (hi + 1) * dh);
      Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt);
      scores = tape.masked_fill(scores, mask, -1e9);
      outs.push_back(tape.matmul(tape.softmax(scores), vh));
    }
    const Var attn = heads == 1 ? outs[0] : tape.concat(outs);
    x = tape.add(x, linear(tape, attn, p + ".attn.out"));
    const Var h2 = affine_norm(tape, x, p + ".norm2");
    x = tape.add(x, linear(tape, tape.tanh(linear(tape, h2, p + ".ffn.in")), p + ".ffn.out"));
  }
  x = affine_norm(tape, x, "final.norm");
  const std::size_t s = config_.layout.position(Modality::kState);
  return tape.slice(tape.reshape(x, {b, k, g * d}), s * d, (s + 1) * d);
}

Var Policy::mlp(Tape& tape, const TokenBatch& batch) {
  const std::size_t b = batch.batch, k = batch.context;
  std::vector<Var> parts;
  for (Modality m : config_.layout.modalities()) {
    switch (m) {
      case Modality::kSuffix:
        parts.push_back(tape.constant({b, k, 1}, scaled_scalar(batch.suffix, true, batch)));
        break;
      case Modality::kPrefix:
        parts.push_back(tape.constant({b, k, 1}, scaled_scalar(batch.prefix, true, batch)));
        break;
      case Modality::kRewardPrefix:
        parts.push_back(tape.constant({b, k, 1}, scaled_scalar(batch.reward_prefix, false, batch)));
        break;
      case Modality::kReturn:
        parts.push_back(tape.constant({b, k, 1}, scaled_scalar(batch.return_to_go, false, batch)));
        break;
      case Modality::kState:
        parts.push_back(tape.constant({b, k, config_.state_dim}, scaled_states(batch)));
        break;
      case Modality::kAction:
        break;
    }
  }
  const Var x = tape.concat(parts);
  const Var h1 = tape.tanh(linear(tape, x, "mlp.l1"));
  return tape.tanh(linear(tape, h1, "mlp.l2"));
}

GaussianHead Policy::forward(Tape& tape, const TokenBatch& batch) {
  batch.check(config_);
  const Var features =
      config_.architecture == Architecture::kTransformer ? transformer(tape, batch) : mlp(tape, batch);
  const Var mean = tape.scale(tape.tanh(linear(tape, features, "head")), config_.action_bound);
  return {mean, tape.parameter(params_.at("log_std"))};
}

LossTerms Policy::loss(Tape& tape, const TokenBatch& batch) {
  const auto head = forward(tape, batch);
  const std::size_t b = batch.batch, k = batch.context, a = config_.action_dim;
  const std::size_t count = batch.real_steps();
  if (count == 0) throw UsageError("loss needs at least one unmasked step");

  const Var target = tape.constant({b, k, a}, batch.actions);
  const Var z = tape.mul(tape.sub(target, head.mean), tape.exp(tape.scale(head.log_std, -1.0)));
  // Per element: 0.5 z^2 + log sigma + 0.5 log 2 pi.
  Var nll = tape.add(tape.scale(tape.mul(z, z), 0.5), tape.add_scalar(head.log_std, kHalfLog2Pi));
  nll = tape.sum_last(nll);
  std::vector<double> weights(b * k);
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = batch.mask[i] ? 1.0 : 0.0;
  const Var nll_mean = tape.scale(tape.sum(tape.mul(nll, tape.constant({b, k}, std::move(weights)))),
                                  1.0 / static_cast<double>(count));
  const Var entropy = tape.add_scalar(tape.sum(head.log_std), static_cast<double>(a) * kHalfLog2PiE);
  const Var loss = tape.sub(nll_mean, tape.scale(entropy, config_.entropy_weight));

  LossTerms out{loss, tape.item(nll_mean), tape.item(entropy)};
  if (!std::isfinite(tape.item(loss))) throw NumericalError("policy loss is not finite");
  return out;
}

Policy::Prediction Policy::predict(const TokenBatch& batch, std::size_t k) {
  if (k >= batch.context) throw UsageError("predict: slot out of range");
  Tape tape;
  const auto head = forward(tape, batch);
  const auto mean = tape.value(head.mean);
  const std::size_t a = config_.action_dim;
  Prediction out;
  out.mean.resize(batch.batch * a);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t j = 0; j < a; ++j) out.mean[b * a + j] = mean[(b * batch.context + k) * a + j];
  }
  for (double ls : params_.at("log_std").data()) out.std.push_back(std::exp(ls));
  return out;
}

void Policy::clamp_log_std() {
  for (double& v : params_.at("log_std").data()) v = std::clamp(v, kMinLogStd, kMaxLogStd);
}

std::string to_json(const PolicyConfig& c) {
  json layout{{"suffix", c.layout.suffix},
              {"prefix", c.layout.prefix},
              {"reward_prefix", c.layout.reward_prefix},
              {"return_to_go", c.layout.return_to_go}};
  json scales{{"state_mean", c.scales.state_mean},
              {"state_std", c.scales.state_std},
              {"reward_scale", c.scales.reward_scale},
              {"robustness_scale", c.scales.robustness_scale},
              {"robustness_clip", c.scales.robustness_clip}};
  json j{{"architecture", c.architecture == Architecture::kTransformer ? "transformer" : "mlp"},
         {"layout", layout},
         {"state_dim", c.state_dim},
         {"action_dim", c.action_dim},
         {"embed_dim", c.embed_dim},
         {"layers", c.layers},
         {"heads", c.heads},
         {"ffn_multiplier", c.ffn_multiplier},
         {"context", c.context},
         {"max_timestep", c.max_timestep},
         {"mlp_hidden", c.mlp_hidden},
         {"action_bound", c.action_bound},
         {"init_log_std", c.init_log_std},
         {"entropy_weight", c.entropy_weight},
         {"scales", scales}};
  return j.dump();
}

PolicyConfig policy_config_from_json(const std::string& text) {
  PolicyConfig c;
  try {
    const json j = json::parse(text);
    const std::string arch = j.value("architecture", std::string("transformer"));
    if (arch != "transformer" && arch != "mlp") throw UsageError("unknown architecture '" + arch + "'");
    c.architecture = arch == "mlp" ? Architecture::kMlp : Architecture::kTransformer;
    if (j.contains("layout")) {
      const auto& l = j.at("layout");
      c.layout.suffix = l.value("suffix", c.layout.suffix);
      c.layout.prefix = l.value("prefix", c.layout.prefix);
      c.layout.reward_prefix = l.value("reward_prefix", c.layout.reward_prefix);
      c.layout.return_to_go = l.value("return_to_go", c.layout.return_to_go);
    }
    c.state_dim = j.value("state_dim", c.state_dim);
    c.action_dim = j.value("action_dim", c.action_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.ffn_multiplier = j.value("ffn_multiplier", c.ffn_multiplier);
    c.context = j.value("context", c.context);
    c.max_timestep = j.value("max_timestep", c.max_timestep);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.action_bound = j.value("action_bound", c.action_bound);
    c.init_log_std = j.value("init_log_std", c.init_log_std);
    c.entropy_weight = j.value("entropy_weight", c.entropy_weight);
    if (j.contains("scales")) {
      const auto& s = j.at("scales");
      c.scales.state_mean = s.value("state_mean", c.scales.state_mean);
      c.scales.state_std = s.value("state_std", c.scales.state_std);
      c.scales.reward_scale = s.value("reward_scale", c.scales.reward_scale);
      c.scales.robustness_scale = s.value("robustness_scale", c.scales.robustness_scale);
      c.scales.robustness_clip = s.value("robustness_clip", c.scales.robustness_clip);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("policy config: ") + e.what());
  }
  c.validate();
  return c;
}

void save_checkpoint(const Policy& policy, const CheckpointMeta& meta, const std::string& path) {
  ad::save_parameters(policy.params(), path);
  json side{{"policy", json::parse(to_json(policy.config()))}, {"env", meta.env}, {"spec", meta.spec}};
  if (!meta.extra.empty()) side["extra"] = json::parse(meta.extra);
  std::ofstream out(path + ".meta.json");
  if (!out) throw DataError("cannot open '" + path + ".meta.json' for writing");
  out << side.dump(2) << '\n';
}

Policy load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path + ".meta.json");
  if (!in) throw DataError("cannot open checkpoint sidecar '" + path + ".meta.json'");
  json side;
  try {
    side = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint sidecar is not valid JSON: ") + e.what());
  }
  if (!side.contains("policy")) throw DataError("checkpoint sidecar lacks 'policy'");
  auto config = policy_config_from_json(side.at("policy").dump());
  if (meta) {
    meta->env = side.value("env", std::string());
    meta->spec = side.value("spec", std::string());
    meta->extra = side.contains("extra") ? side.at("extra").dump() : std::string();
  }
  return Policy(std::move(config), ad::load_parameters(path));
}

}  // namespace sdt::policy
