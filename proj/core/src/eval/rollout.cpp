#include "sdt/eval/rollout.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>

#include "sdt/common/error.hpp"
#include "sdt/data/relabel.hpp"
#include "sdt/env/behavior.hpp"
#include "sdt/stl/robustness.hpp"
#include "sdt/train/trainer.hpp"

namespace sdt::eval {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSampleStream = 0x5bd1e9955bd1e995ULL;

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw UsageError("invalid " + what + " '" + text + "'");
  }
  return v;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / n)};
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

void check_schemas(const policy::Policy& policy, const stl::Formula& formula) {
  const auto& c = policy.config();
  if (c.state_dim != env::kStateChannels || c.action_dim != env::kActionDim) {
    throw DataError("schema mismatch: policy expects state_dim " + std::to_string(c.state_dim) +
                    " and action_dim " + std::to_string(c.action_dim) + ", env provides " +
                    std::to_string(env::kStateChannels) + " and " + std::to_string(env::kActionDim));
  }
  stl::validate(formula, env::state_schema());
}

}  // namespace

SuffixSchedule parse_schedule(const std::string& text) {
  if (text == "mean") return {ScheduleKind::kMean, 0.0};
  if (text == "max") return {ScheduleKind::kMax, 0.0};
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (colon == std::string::npos || (kind != "fixed" && kind != "linear")) {
    throw UsageError("invalid suffix schedule '" + text + "' (expected fixed:v|linear:v|mean|max)");
  }
  return {kind == "fixed" ? ScheduleKind::kFixed : ScheduleKind::kLinear,
          parse_double(text.substr(colon + 1), "suffix target")};
}

std::string to_string(const SuffixSchedule& s) {
  switch (s.kind) {
    case ScheduleKind::kFixed:
      return "fixed:" + json(s.value).dump();
    case ScheduleKind::kLinear:
      return "linear:" + json(s.value).dump();
    case ScheduleKind::kMean:
      return "mean";
    case ScheduleKind::kMax:
      return "max";
  }
  return "mean";
}

std::vector<double> suffix_schedule(const SuffixSchedule& schedule, const data::DatasetStats* stats,
                                    std::size_t horizon) {
  if (horizon == 0) throw UsageError("suffix schedule needs a positive horizon");
  switch (schedule.kind) {
    case ScheduleKind::kFixed:
      return std::vector<double>(horizon, schedule.value);
    case ScheduleKind::kLinear: {
      std::vector<double> out(horizon, schedule.value);
      for (std::size_t t = 0; t + 1 < horizon; ++t) {
        out[t] = schedule.value * static_cast<double>(t) / static_cast<double>(horizon - 1);
      }
      return out;
    }
    case ScheduleKind::kMean:
    case ScheduleKind::kMax: {
      const char* name = schedule.kind == ScheduleKind::kMean ? "mean" : "max";
      if (stats == nullptr) throw DataError(std::string(name) + " suffix schedule needs dataset stats");
      const auto& curve = schedule.kind == ScheduleKind::kMean ? stats->suffix_mean : stats->suffix_max;
      if (curve.size() < horizon) {
        throw DataError(std::string(name) + " suffix schedule: dataset stats cover " +
                        std::to_string(curve.size()) + " safe steps, horizon is " + std::to_string(horizon));
      }
      return {curve.begin(), curve.begin() + static_cast<std::ptrdiff_t>(horizon)};
    }
  }
  return {};
}

void EvalConfig::validate(std::size_t horizon) const {
  if (episodes < 1) throw UsageError("eval needs episodes >= 1");
  if (!std::isfinite(target_reward)) throw UsageError("target reward must be finite");
  if (!explicit_schedule.empty() && explicit_schedule.size() != horizon) {
    throw UsageError("suffix schedule has length " + std::to_string(explicit_schedule.size()) +
                     ", env horizon is " + std::to_string(horizon));
  }
}

std::string to_json(const EvalConfig& c) {
  json j{{"target_reward", c.target_reward},
         {"schedule", to_string(c.schedule)},
         {"episodes", c.episodes},
         {"seed", c.seed},
         {"mode", c.mode == ActionMode::kMean ? "mean" : "sample"}};
  if (!c.explicit_schedule.empty()) j["explicit_schedule"] = c.explicit_schedule;
  return j.dump();
}

std::pair<double, double> default_targets(const data::DatasetStats& stats) {
  if (stats.safe_returns.empty()) throw DataError("dataset has no safe trajectories to derive targets from");
  return {data::percentile(stats.safe_returns, 0.9), data::percentile(stats.safe_robustness, 0.5)};
}

std::vector<Episode> rollout(policy::Policy& policy, const env::EnvConfig& env, const stl::Formula& formula,
                             const std::vector<double>& target_suffix, double target_reward,
                             std::size_t episodes, std::uint64_t seed, ActionMode mode) {
  env.validate();
  check_schemas(policy, formula);
  const std::size_t horizon = env.horizon;
  if (target_suffix.size() != horizon) {
    throw UsageError("suffix schedule has length " + std::to_string(target_suffix.size()) +
                     ", env horizon is " + std::to_string(horizon));
  }
  if (episodes < 1) throw UsageError("rollout needs episodes >= 1");
  if (horizon > policy.config().max_timestep) {
    throw UsageError("env horizon " + std::to_string(horizon) + " exceeds the policy's max_timestep " +
                     std::to_string(policy.config().max_timestep));
  }
  const std::size_t s_dim = env::kStateChannels, a_dim = env::kActionDim;
  const std::size_t context = policy.config().context;

  std::vector<env::EnvState> current(episodes);
  std::vector<std::mt19937_64> sample_rngs;
  std::vector<std::vector<env::EnvState>> states(episodes);
  std::vector<std::vector<env::Action>> actions(episodes);
  std::vector<Episode> out(episodes);
  // Partial trajectories carrying the conditioning tokens seen so far.
  std::vector<data::Trajectory> partial(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    auto rng = env::seeded_rng(seed, i);
    current[i] = env::initial_state(env, rng);
    sample_rngs.push_back(env::seeded_rng(seed ^ kSampleStream, i));
    auto& p = partial[i];
    p.schema = env::state_schema();
    p.action_dim = a_dim;
    p.prefix.emplace();
    p.suffix.emplace();
    p.return_to_go.emplace();
    out[i].return_to_go.push_back(target_reward);
  }

  policy::TokenBatch batch(episodes, context, s_dim, a_dim);
  for (std::size_t t = 1; t <= horizon; ++t) {
    for (std::size_t i = 0; i < episodes; ++i) {
      auto& p = partial[i];
      const auto obs = env::observe(current[i]);
      p.states.insert(p.states.end(), obs.begin(), obs.end());
      p.actions.insert(p.actions.end(), a_dim, 0.0);
      p.rewards.push_back(0.0);
      const double prefix = stl::prefix_robustness(p.signal(), t, formula);
      p.prefix->push_back(prefix);
      p.suffix->push_back(target_suffix[t - 1]);
      p.return_to_go->push_back(out[i].return_to_go.back());
      train::fill_window(batch, i, p, t);
    }
    const auto prediction = policy.predict(batch, context - 1);
    for (std::size_t i = 0; i < episodes; ++i) {
      env::Action a{};
      for (std::size_t j = 0; j < a_dim; ++j) {
        double v = prediction.mean[i * a_dim + j];
        if (mode == ActionMode::kSample) {
          v += prediction.std[j] * std::normal_distribution<double>(0.0, 1.0)(sample_rngs[i]);
        }
        if (!std::isfinite(v)) {
          throw NumericalError("non-finite action at step " + std::to_string(t) + " of episode " +
                               std::to_string(i));
        }
        a[j] = std::clamp(v, -env.action_bound, env.action_bound);
      }
      const auto result = env::step(env, current[i], a);
      auto& p = partial[i];
      std::copy(a.begin(), a.end(), p.actions.end() - static_cast<std::ptrdiff_t>(a_dim));
      p.rewards.back() = result.reward;
      states[i].push_back(current[i]);
      actions[i].push_back(a);
      if (t < horizon) out[i].return_to_go.push_back(out[i].return_to_go.back() - result.reward);
      current[i] = result.state;
    }
  }

  for (std::size_t i = 0; i < episodes; ++i) {
    out[i].trajectory = env::make_trajectory(env, states[i], actions[i], partial[i].rewards);
    out[i].prefix = std::move(*partial[i].prefix);
    out[i].target_suffix = target_suffix;
  }
  return out;
}

EpisodeMetrics episode_metrics(const Episode& episode, EnvKind kind, const stl::Formula& formula) {
  const auto& t = episode.trajectory;
  EpisodeMetrics m;
  m.reward = t.total_reward();
  const auto relabeled = data::relabel_costs(t, kind);
  m.cost = std::accumulate(relabeled.begin(), relabeled.end(), 0.0);
  m.robustness = stl::robustness(t.signal(), 1, formula);
  m.satisfied = stl::satisfied(m.robustness);
  return m;
}

EvalReport summarize(std::vector<EpisodeMetrics> episodes, const data::DatasetStats* stats) {
  EvalReport r;
  std::vector<double> rewards, costs, rho, normalized;
  std::size_t satisfied = 0;
  const bool normalize = stats != nullptr && stats->r_min && stats->r_max && *stats->r_max > *stats->r_min;
  for (const auto& e : episodes) {
    rewards.push_back(e.reward);
    costs.push_back(e.cost);
    rho.push_back(e.robustness);
    if (normalize) normalized.push_back(data::normalized_reward(e.reward, *stats));
    if (e.satisfied) ++satisfied;
  }
  std::tie(r.reward_mean, r.reward_std) = mean_std(rewards);
  std::tie(r.cost_mean, r.cost_std) = mean_std(costs);
  std::tie(r.suffix_mean, r.suffix_std) = mean_std(rho);
  if (normalize) {
    const auto [m, s] = mean_std(normalized);
    r.normalized_reward_mean = m;
    r.normalized_reward_std = s;
  }
  r.satisfaction_rate =
      episodes.empty() ? 0.0 : static_cast<double>(satisfied) / static_cast<double>(episodes.size());
  r.episodes = std::move(episodes);
  return r;
}

EvalReport evaluate(policy::Policy& policy, const env::EnvConfig& env, const stl::Formula& formula,
                    const EvalConfig& config, const data::DatasetStats* stats) {
  config.validate(env.horizon);
  const auto schedule = config.explicit_schedule.empty()
                            ? suffix_schedule(config.schedule, stats, env.horizon)
                            : config.explicit_schedule;
  const auto episodes =
      rollout(policy, env, formula, schedule, config.target_reward, config.episodes, config.seed, config.mode);
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(episodes.size());
  for (const auto& e : episodes) metrics.push_back(episode_metrics(e, env.kind, formula));
  return summarize(std::move(metrics), stats);
}

std::string to_json(const EvalReport& r) {
  json episodes = json::array();
  for (const auto& e : r.episodes) {
    episodes.push_back(
        {{"reward", e.reward}, {"cost", e.cost}, {"robustness", e.robustness}, {"satisfied", e.satisfied}});
  }
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j{{"episodes", episodes},
         {"reward_mean", r.reward_mean},
         {"reward_std", r.reward_std},
         {"normalized_reward_mean", opt(r.normalized_reward_mean)},
         {"normalized_reward_std", opt(r.normalized_reward_std)},
         {"cost_mean", r.cost_mean},
         {"cost_std", r.cost_std},
         {"satisfaction_rate", r.satisfaction_rate},
         {"suffix_mean", r.suffix_mean},
         {"suffix_std", r.suffix_std}};
  return j.dump();
}

std::vector<SweepRow> alignment_sweep(policy::Policy& policy, const env::EnvConfig& env,
                                      const stl::Formula& formula,
                                      std::vector<std::pair<double, double>> grid, std::size_t episodes,
                                      std::uint64_t seed, ActionMode mode) {
  if (grid.empty()) throw UsageError("alignment sweep grid is empty");
  std::sort(grid.begin(), grid.end());
  std::vector<SweepRow> rows;
  for (const auto& [reward, suffix] : grid) {
    EvalConfig config;
    config.target_reward = reward;
    config.schedule = {ScheduleKind::kFixed, suffix};
    config.episodes = episodes;
    config.seed = seed;
    config.mode = mode;
    const auto report = evaluate(policy, env, formula, config);
    rows.push_back({reward, suffix, report.reward_mean, report.reward_std, report.suffix_mean,
                    report.suffix_std, report.satisfaction_rate});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "target_reward,target_suffix,reward_mean,reward_std,suffix_mean,suffix_std,satisfaction_rate\n";
  for (const auto& r : rows) {
    out << json(r.target_reward).dump() << ',' << json(r.target_suffix).dump() << ','
        << json(r.reward_mean).dump() << ',' << json(r.reward_std).dump() << ','
        << json(r.suffix_mean).dump() << ',' << json(r.suffix_std).dump() << ','
        << json(r.satisfaction_rate).dump() << '\n';
  }
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UsageError("spearman: inputs differ in length");
  if (x.size() < 2) throw UsageError("spearman needs at least two points");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const auto [mx, sx] = mean_std(rx);
  const auto [my, sy] = mean_std(ry);
  if (sx == 0.0 || sy == 0.0) return 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - mx) * (ry[i] - my);
  return cov / static_cast<double>(rx.size()) / (sx * sy);
}

}  // namespace sdt::eval
