#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "sdt/data/relabel.hpp"
#include "sdt/env/behavior.hpp"
#include "sdt/eval/rollout.hpp"
#include "sdt/stl/robustness.hpp"
#include "sdt/stl/specs.hpp"
#include "sdt/train/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/policy_fixtures.hpp"
#include "support/random_stl.hpp"

namespace {

using namespace sdt;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

Outcome stl_oracle_equivalence() {
  const auto start = Clock::now();
  testing::RandomStl gen(1001);
  std::size_t steps = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto f = gen.formula(4);
    const auto s = gen.signal(gen.uniform(1, 30));
    const auto trace = stl::robustness_trace(s, f);
    for (std::size_t t = 1; t <= s.length(); ++t, ++steps) {
      if (trace.at(t) != stl::robustness_bruteforce(s, t, f)) {
        return {false, fmt("case %d t=%zu differs: %s", i, t, stl::to_string(f).c_str())};
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {elapsed < 10.0, fmt("1000 cases, %zu steps exact, %.2f s (limit 10 s)", steps, elapsed)};
}

Outcome sign_soundness() {
  testing::RandomStl gen(1002);
  int checked = 0, agree = 0;
  while (checked < 500) {
    const auto f = gen.formula(4);
    const auto s = gen.signal(gen.uniform(1, 30));
    const std::size_t t = gen.uniform(1, s.length());
    const double rho = stl::robustness(s, t, f);
    if (std::fabs(rho) <= 1e-9) continue;
    ++checked;
    agree += stl::boolean_satisfaction(s, t, f) == (rho > 0);
  }
  return {agree == checked, fmt("%d/%d agree", agree, checked)};
}

// Prefix monotonicity is checked with state-local G bodies; suffix
// monotonicity and the identities also with temporal bodies and on phi_run.
Outcome prefix_suffix_identities() {
  testing::RandomStl gen(1003);
  int violations = 0;
  auto check = [&](const stl::Signal& s, const stl::Formula& f, bool prefix_monotone) {
    const std::size_t T = s.length();
    for (std::size_t t = 1; t < T; ++t) {
      if (prefix_monotone && stl::prefix_robustness(s, t, f) < stl::prefix_robustness(s, t + 1, f)) ++violations;
      if (stl::suffix_robustness(s, t, f) > stl::suffix_robustness(s, t + 1, f)) ++violations;
    }
    const double rho = stl::robustness(s, 1, f);
    if (stl::prefix_robustness(s, T, f) != rho || stl::suffix_robustness(s, 1, f) != rho) ++violations;
  };
  for (int i = 0; i < 200; ++i) {
    const auto s = gen.signal(gen.uniform(1, 30));
    check(s, stl::Formula::globally(stl::Interval::unbounded(), gen.propositional(3)), true);
    check(s, stl::Formula::globally(stl::Interval::unbounded(), gen.formula(2)), false);
  }
  const auto run = env::default_config(EnvKind::kRun);
  const auto d = env::generate_dataset(run, 200, env::default_mix(EnvKind::kRun), 1003);
  for (const auto& t : d.trajectories) check(t.signal(), env::builtin_spec(run), false);
  return {violations == 0, fmt("600 trajectory/formula pairs, %d violations", violations)};
}

Outcome relabel_equivalence() {
  std::string detail;
  bool pass = true;
  for (auto kind : {EnvKind::kRun, EnvKind::kCircle, EnvKind::kReach}) {
    const auto config = env::default_config(kind);
    auto phi = env::builtin_spec(config);
    // Relabeled costs cover the boundary part of the Reach specification.
    if (kind == EnvKind::kReach) phi = phi.child(0);
    data::RelabelAudit exact, published;
    for (std::uint64_t seed = 0; exact.checked < 500; ++seed) {
      auto d = env::generate_dataset(config, 500 - exact.checked, env::default_mix(kind), 4000 + seed);
      auto copy = d;
      const auto a = data::relabel_dataset(d, kind, phi);
      const auto b = data::relabel_dataset(copy, kind, phi, data::RelabelRule::kPublished);
      exact.checked += a.checked;
      exact.mismatches += a.mismatches;
      published.checked += b.checked;
      published.mismatches += b.mismatches;
    }
    pass &= exact.mismatches == 0;
    detail += fmt("%s %zu/%zu ok (published rule: %zu mismatches); ", to_string(kind).c_str(),
                  exact.checked - exact.mismatches, exact.checked, published.mismatches);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome rescaling_invariance() {
  testing::RandomStl gen(1005);
  const std::vector<double> alphas{0.01, 0.1, 10, 100};
  int checked = 0, flips = 0;
  while (checked < 200) {
    const auto f = gen.formula(3, false);
    const auto s = gen.signal(gen.uniform(1, 20));
    std::vector<stl::Formula> leaves;
    std::function<void(const stl::Formula&)> collect = [&](const stl::Formula& g) {
      if (g.kind() == stl::Formula::Kind::kPredicate) leaves.push_back(g);
      for (const auto& c : g.children()) collect(c);
    };
    collect(f);
    bool separated = true;
    for (const auto& leaf : leaves) {
      for (double v : stl::robustness_trace(s, leaf).values) separated &= std::fabs(v) > 1e-6;
    }
    if (!separated) continue;
    ++checked;
    const bool sign = stl::robustness(s, 1, f) > 0;
    const auto labels = stl::predicate_labels(f);
    for (double alpha : alphas) {
      flips += (stl::robustness(s, 1, stl::scale_predicate(f, labels, alpha)) > 0) != sign;
      flips += (stl::robustness(s, 1, stl::scale_predicate(f, {labels.front()}, alpha)) > 0) != sign;
    }
  }
  return {flips == 0, fmt("%d cases x 4 alphas x {all, one} labels, %d sign flips", checked, flips)};
}

Outcome gradient_correctness() {
  auto c = testing::tiny_config(3);
  c.embed_dim = 8;
  c.layers = 1;
  policy::Policy p(c, 1006);
  testing::randomize(p, 1007);
  std::mt19937_64 rng(1008);
  const auto batch = testing::random_batch(c, 3, rng);
  const auto r = testing::grad_check(p.params(), [&](ad::Tape& t) { return p.loss(t, batch).loss; });
  return {r.max_rel_error < 1e-4, fmt("max relative error %.3g at %s (limit 1e-4)", r.max_rel_error, r.worst.c_str())};
}

Outcome causality() {
  const auto c = testing::tiny_config(4);
  policy::Policy p(c, 1009);
  testing::randomize(p, 1010);
  auto distribution = [&](const policy::TokenBatch& tb) {
    ad::Tape t;
    const auto out = p.forward(t, tb);
    auto mean = t.value(out.mean);
    auto log_std = t.value(out.log_std);
    std::vector<double> v(mean.begin(), mean.end());
    v.insert(v.end(), log_std.begin(), log_std.end());
    return v;
  };
  std::mt19937_64 rng(1011);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int changed = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto base = testing::random_batch(c, 3, rng);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, c.context - 1)(rng);
    auto perturbed = base;
    for (std::size_t b = 0; b < base.batch; ++b) {
      for (std::size_t k = t + 1; k < c.context; ++k) {
        const auto i = perturbed.slot(b, k);
        perturbed.suffix[i] += gauss(rng);
        perturbed.prefix[i] += gauss(rng);
        perturbed.return_to_go[i] += gauss(rng);
        perturbed.reward_prefix[i] += gauss(rng);
        for (std::size_t s = 0; s < c.state_dim; ++s) perturbed.states[i * c.state_dim + s] += gauss(rng);
        for (std::size_t a = 0; a < c.action_dim; ++a) perturbed.actions[i * c.action_dim + a] += gauss(rng);
      }
      const auto i = perturbed.slot(b, t);
      for (std::size_t a = 0; a < c.action_dim; ++a) perturbed.actions[i * c.action_dim + a] += gauss(rng);
    }
    const auto before = distribution(base);
    const auto after = distribution(perturbed);
    const std::size_t means = base.batch * c.context * c.action_dim;
    for (std::size_t b = 0; b < base.batch; ++b) {
      for (std::size_t k = 0; k <= t; ++k) {
        for (std::size_t a = 0; a < c.action_dim; ++a) {
          changed += before[base.slot(b, k) * c.action_dim + a] != after[base.slot(b, k) * c.action_dim + a];
        }
      }
    }
    for (std::size_t i = means; i < before.size(); ++i) changed += before[i] != after[i];
  }
  return {changed == 0, fmt("50 perturbations, %d earlier outputs changed", changed)};
}

data::OfflineDataset annotated(const env::EnvConfig& config, std::size_t n, std::uint64_t seed) {
  auto d = env::generate_dataset(config, n, env::default_mix(config.kind), seed);
  data::annotate_dataset(d, env::builtin_spec(config));
  return d;
}

struct OverfitRun {
  train::TrainResult result;
  double initial_mse = 0;
  double final_mse = 0;
  double seconds = 0;
};

// Squared error of the action mean over every window of the dataset.
double action_mse(policy::Policy& p, const data::OfflineDataset& d) {
  std::size_t windows = 0;
  for (const auto& t : d.trajectories) windows += t.length();
  const auto& c = p.config();
  policy::TokenBatch batch(windows, c.context, c.state_dim, c.action_dim);
  std::size_t item = 0;
  for (const auto& t : d.trajectories) {
    for (std::size_t end = 1; end <= t.length(); ++end) train::fill_window(batch, item++, t, end);
  }
  ad::Tape tape;
  const auto mean = tape.value(p.forward(tape, batch).mean);
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < batch.mask.size(); ++i) {
    if (!batch.mask[i]) continue;
    for (std::size_t a = 0; a < c.action_dim; ++a, ++count) {
      const double e = mean[i * c.action_dim + a] - batch.actions[i * c.action_dim + a];
      sum += e * e;
    }
  }
  return sum / double(count);
}

OverfitRun overfit_run() {
  auto config = env::default_config(EnvKind::kRun);
  config.horizon = 20;
  const auto d = annotated(config, 4, 1012);
  train::TrainConfig tc;
  tc.steps = 200;
  tc.batch_size = 8;
  tc.lr = 1e-2;
  tc.policy.embed_dim = 16;
  tc.policy.layers = 1;
  tc.policy.heads = 2;
  tc.policy.ffn_multiplier = 2;
  tc.policy.context = 4;
  const auto start = Clock::now();
  auto result = train::train(d, tc);
  const double seconds = seconds_since(start);
  policy::Policy initial(result.policy.config(), tc.seed);
  const double initial_mse = action_mse(initial, d);
  const double final_mse = action_mse(result.policy, d);
  return {std::move(result), initial_mse, final_mse, seconds};
}

Outcome overfit(const OverfitRun& run) {
  const double first = run.result.history.front().loss;
  const double last = run.result.history.back().loss;
  const double mse_ratio = run.final_mse / run.initial_mse;
  return {last <= 0.1 * first && mse_ratio <= 0.1 && run.seconds < 60.0,
          fmt("loss %.4f -> %.4f (ratio %.4f, limit 0.1), action-mean MSE %.4g -> %.4g (ratio %.4f, limit 0.1), "
              "%.1f s (limit 60 s)",
              first, last, last / first, run.initial_mse, run.final_mse, mse_ratio, run.seconds)};
}

// Desk-scale Run setup shared by criteria 9 to 12.
struct RunSetup {
  env::EnvConfig env = env::default_config(EnvKind::kRun);
  stl::Formula phi = env::builtin_spec(env);
  data::OfflineDataset dataset;
  data::DatasetStats stats;
  double target_reward = 0;
  double target_suffix = 0;
};

constexpr std::uint64_t kEvalSeeds[] = {100, 101, 102};
constexpr std::size_t kEpisodes = 20;

RunSetup run_setup() {
  RunSetup s;
  s.dataset = annotated(s.env, 2000, 1);
  s.stats = data::compute_stats(s.dataset, s.phi);
  s.target_reward = data::percentile(s.stats.safe_returns, 0.9);
  s.target_suffix = data::percentile(s.stats.safe_robustness, 0.9);
  return s;
}

train::TrainConfig desk_config(policy::TokenLayout layout, bool safe_only) {
  train::TrainConfig tc;
  tc.steps = 20000;
  tc.batch_size = 32;
  tc.lr = 1e-3;
  tc.seed = 0;
  tc.safe_only = safe_only;
  tc.policy.embed_dim = 32;
  tc.policy.layers = 1;
  tc.policy.heads = 1;
  tc.policy.ffn_multiplier = 2;
  tc.policy.context = 4;
  tc.policy.layout = layout;
  return tc;
}

struct Variant {
  train::TrainResult result;
  std::vector<eval::EvalReport> reports;
  double satisfaction = 0;
  double train_seconds = 0;
  double eval_seconds = 0;
};

Variant run_variant(const RunSetup& s, const train::TrainConfig& tc) {
  auto start = Clock::now();
  Variant v{train::train(s.dataset, tc), {}, 0, seconds_since(start), 0};
  start = Clock::now();
  for (std::uint64_t seed : kEvalSeeds) {
    eval::EvalConfig ec;
    ec.target_reward = s.target_reward;
    ec.schedule = {eval::ScheduleKind::kFixed, s.target_suffix};
    ec.episodes = kEpisodes;
    ec.seed = seed;
    ec.mode = eval::ActionMode::kSample;
    v.reports.push_back(eval::evaluate(v.result.policy, s.env, s.phi, ec, &s.stats));
    v.satisfaction += v.reports.back().satisfaction_rate / std::size(kEvalSeeds);
  }
  v.eval_seconds = seconds_since(start);
  return v;
}

std::string per_seed(const Variant& v) {
  std::string out;
  for (const auto& r : v.reports) out += fmt("%s%.2f", out.empty() ? "" : "/", r.satisfaction_rate);
  return out;
}

struct Criterion9 {
  RunSetup setup;
  Variant sdt;
  Variant bc;
  double seconds = 0;
};

Criterion9 criterion9_run() {
  const auto start = Clock::now();
  auto setup = run_setup();
  auto sdt = run_variant(setup, desk_config({}, false));
  auto bc = run_variant(setup, desk_config(policy::TokenLayout::behavior_cloning(), true));
  return {std::move(setup), std::move(sdt), std::move(bc), seconds_since(start)};
}

Outcome learning(const Criterion9& c) {
  const bool band = c.setup.stats.satisfaction_fraction >= 0.1 && c.setup.stats.satisfaction_fraction <= 0.3;
  const bool pass = band && c.sdt.satisfaction >= 0.8 && c.sdt.satisfaction > c.bc.satisfaction && c.seconds <= 1200;
  return {pass, fmt("dataset satisfaction %.4f (band 0.1-0.3), target R %.2f suffix %.4f; SDT %.4f [%s] "
                    "(limit >= 0.8), BC-safe %.4f [%s]; %.0f s (limit 1200 s: SDT train %.0f s, BC %.0f s)",
                    c.setup.stats.satisfaction_fraction, c.setup.target_reward, c.setup.target_suffix,
                    c.sdt.satisfaction, per_seed(c.sdt).c_str(), c.bc.satisfaction, per_seed(c.bc).c_str(),
                    c.seconds, c.sdt.train_seconds, c.bc.train_seconds)};
}

Outcome alignment(Criterion9& c) {
  std::vector<std::pair<double, double>> grid;
  for (double v : {-0.1, 0.0, 0.02, 0.05, 0.1, 0.15, 0.2}) grid.emplace_back(c.setup.target_reward, v);
  const auto rows = eval::alignment_sweep(c.sdt.result.policy, c.setup.env, c.setup.phi, grid, kEpisodes, 7,
                                          eval::ActionMode::kSample);
  std::vector<double> target, achieved;
  std::string detail;
  for (const auto& row : rows) {
    target.push_back(row.target_suffix);
    achieved.push_back(row.suffix_mean);
    detail += fmt("%s%.2f->%.3f", detail.empty() ? "" : " ", row.target_suffix, row.suffix_mean);
  }
  const double rho = eval::spearman(target, achieved);
  return {rows.size() >= 5 && rho >= 0.5, fmt("Spearman %.3f (limit 0.5) over %zu targets: %s", rho, rows.size(),
                                               detail.c_str())};
}

Outcome ablation(const Criterion9& c) {
  auto no_suffix_layout = policy::TokenLayout{};
  no_suffix_layout.suffix = false;
  auto no_prefix_layout = policy::TokenLayout{};
  no_prefix_layout.prefix = false;
  const auto no_suffix = run_variant(c.setup, desk_config(no_suffix_layout, false));
  const auto no_prefix = run_variant(c.setup, desk_config(no_prefix_layout, false));
  return {no_suffix.satisfaction < c.sdt.satisfaction,
          fmt("SDT %.4f, no-suffix %.4f [%s], no-prefix %.4f [%s] (reported)", c.sdt.satisfaction,
              no_suffix.satisfaction, per_seed(no_suffix).c_str(), no_prefix.satisfaction,
              per_seed(no_prefix).c_str())};
}

bool same_reports(const Variant& a, const Variant& b) {
  if (a.reports.size() != b.reports.size()) return false;
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    if (eval::to_json(a.reports[i]) != eval::to_json(b.reports[i])) return false;
  }
  return true;
}

bool same_training(const train::TrainResult& a, const train::TrainResult& b) {
  if (!(a.policy.params() == b.policy.params()) || a.history.size() != b.history.size()) return false;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    if (a.history[i].loss != b.history[i].loss) return false;
  }
  return true;
}

Outcome determinism(const OverfitRun& overfit8, const Criterion9& first) {
  const auto again8 = overfit_run();
  const auto again9 = criterion9_run();
  std::vector<std::string> diffs;
  if (!same_training(overfit8.result, again8.result)) diffs.push_back("overfit training");
  if (!(first.setup.dataset == again9.setup.dataset)) diffs.push_back("dataset");
  if (!(first.setup.stats == again9.setup.stats)) diffs.push_back("dataset stats");
  if (!same_training(first.sdt.result, again9.sdt.result)) diffs.push_back("SDT training");
  if (!same_training(first.bc.result, again9.bc.result)) diffs.push_back("BC-safe training");
  if (!same_reports(first.sdt, again9.sdt)) diffs.push_back("SDT evaluation");
  if (!same_reports(first.bc, again9.bc)) diffs.push_back("BC-safe evaluation");
  std::string detail = "criteria 8-9 rerun: ";
  if (diffs.empty()) {
    detail += "dataset, stats, parameters, loss curves and eval reports bit-identical";
  } else {
    for (const auto& d : diffs) detail += d + " differs; ";
  }
  return {diffs.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite: one PASS/FAIL line per criterion"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default all)")->check(CLI::Range(1, 12))->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}
                                              : std::set<int>(only.begin(), only.end());

  const std::map<int, std::string> names{
      {1, "STL oracle equivalence"},  {2, "sign soundness"},       {3, "prefix/suffix identities"},
      {4, "relabel equivalence"},     {5, "rescaling invariance"}, {6, "gradient correctness"},
      {7, "causality"},               {8, "overfit sanity"},       {9, "desk-scale learning"},
      {10, "desk-scale alignment"},   {11, "ablation direction"},  {12, "determinism"}};

  std::optional<OverfitRun> overfit8;
  std::optional<Criterion9> run9;
  auto need8 = [&]() -> const OverfitRun& {
    if (!overfit8) overfit8 = overfit_run();
    return *overfit8;
  };
  auto need9 = [&]() -> Criterion9& {
    if (!run9) run9 = criterion9_run();
    return *run9;
  };
  const std::map<int, std::function<Outcome()>> criteria{
      {1, stl_oracle_equivalence},
      {2, sign_soundness},
      {3, prefix_suffix_identities},
      {4, relabel_equivalence},
      {5, rescaling_invariance},
      {6, gradient_correctness},
      {7, causality},
      {8, [&] { return overfit(need8()); }},
      {9, [&] { return learning(need9()); }},
      {10, [&] { return alignment(need9()); }},
      {11, [&] { return ablation(need9()); }},
      {12, [&] { return determinism(need8(), need9()); }},
  };

  int failures = 0;
  for (int id : selected) {
    Outcome outcome;
    try {
      outcome = criteria.at(id)();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << names.at(id)
              << "): " << outcome.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all selected criteria passed" : fmt("%d criteria failed", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
