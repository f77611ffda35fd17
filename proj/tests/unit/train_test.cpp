#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdt/common/error.hpp"
#include "sdt/data/relabel.hpp"
#include "sdt/env/behavior.hpp"
#include "sdt/train/trainer.hpp"

namespace sdt::train {
namespace {

data::OfflineDataset annotated_run(std::size_t n, std::size_t horizon = 20, std::uint64_t seed = 0) {
  auto c = env::default_config(EnvKind::kRun);
  c.horizon = horizon;
  auto d = env::generate_dataset(c, n, env::default_mix(EnvKind::kRun), seed);
  data::annotate_dataset(d, env::builtin_spec(c));
  return d;
}

data::Trajectory short_trajectory(std::size_t length) {
  data::Trajectory t;
  t.schema = {"a", "b"};
  t.action_dim = 1;
  for (std::size_t i = 0; i < length; ++i) {
    t.states.insert(t.states.end(), {double(i), -double(i)});
    t.actions.push_back(0.1 * double(i));
    t.rewards.push_back(1.0 + double(i));
    t.costs_p.push_back(0.0);
  }
  t.prefix = std::vector<double>(length, 0.5);
  t.suffix = std::vector<double>(length, 0.25);
  t.return_to_go = data::return_to_go(t.rewards);
  return t;
}

TrainConfig small_config(std::size_t steps) {
  TrainConfig c;
  c.steps = steps;
  c.batch_size = 8;
  c.lr = 1e-3;
  c.policy.embed_dim = 16;
  c.policy.layers = 1;
  c.policy.heads = 2;
  c.policy.ffn_multiplier = 2;
  c.policy.context = 4;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sdt_train_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(FillWindowTest, ShortTrajectoryIsFrontPadded) {
  policy::TokenBatch batch(1, 8, 2, 1);
  fill_window(batch, 0, short_trajectory(3), 3);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(batch.mask[k], 0) << k;
  for (std::size_t k = 5; k < 8; ++k) {
    EXPECT_EQ(batch.mask[k], 1) << k;
    EXPECT_EQ(batch.timesteps[k], k - 5);
  }
  EXPECT_EQ(batch.real_steps(), 3u);
  EXPECT_EQ(batch.states[2 * 7], 2.0);
  EXPECT_EQ(batch.actions[7], 0.2);
}

TEST(FillWindowTest, ContextOneHoldsOnlyTheEndStep) {
  policy::TokenBatch batch(1, 1, 2, 1);
  fill_window(batch, 0, short_trajectory(5), 4);
  EXPECT_EQ(batch.mask[0], 1);
  EXPECT_EQ(batch.timesteps[0], 3u);
  EXPECT_EQ(batch.states[0], 3.0);
  EXPECT_EQ(batch.return_to_go[0], 4.0 + 5.0);
  EXPECT_EQ(batch.reward_prefix[0], 1.0 + 2.0 + 3.0);
}

TEST(FillWindowTest, RewardPrefixAndReturnSumToTotal) {
  const auto t = short_trajectory(7);
  for (std::size_t end = 1; end <= 7; ++end) {
    policy::TokenBatch batch(1, 3, 2, 1);
    fill_window(batch, 0, t, end);
    for (std::size_t k = 0; k < 3; ++k) {
      if (!batch.mask[k]) continue;
      EXPECT_EQ(batch.reward_prefix[k] + batch.return_to_go[k], t.total_reward());
    }
  }
}

TEST(FillWindowTest, RejectsBadEndStep) {
  policy::TokenBatch batch(1, 3, 2, 1);
  EXPECT_THROW(fill_window(batch, 0, short_trajectory(3), 0), UsageError);
  EXPECT_THROW(fill_window(batch, 0, short_trajectory(3), 4), UsageError);
}

TEST(SampleBatchTest, SameSeedSameBatch) {
  const auto d = annotated_run(10);
  const auto pool = sampling_pool(d, false);
  std::mt19937_64 a(5), b(5);
  EXPECT_EQ(sample_batch(d, pool, 16, 4, a), sample_batch(d, pool, 16, 4, b));
  std::mt19937_64 c(6);
  std::mt19937_64 a2(5);
  EXPECT_NE(sample_batch(d, pool, 16, 4, a2), sample_batch(d, pool, 16, 4, c));
}

TEST(SampleBatchTest, ErrorsOnEmptyOrUnannotatedData) {
  data::OfflineDataset empty;
  std::mt19937_64 rng(0);
  EXPECT_THROW(sample_batch(empty, {}, 4, 2, rng), DataError);
  auto c = env::default_config(EnvKind::kRun);
  c.horizon = 12;
  const auto raw = env::generate_dataset(c, 2, env::default_mix(EnvKind::kRun), 0);
  EXPECT_THROW(sampling_pool(raw, false), DataError);
}

TEST(SampleBatchTest, SafePoolKeepsPositiveSuffixOnly) {
  const auto d = annotated_run(40);
  const auto safe = sampling_pool(d, true);
  EXPECT_LT(safe.size(), d.trajectories.size());
  EXPECT_FALSE(safe.empty());
  for (std::size_t i : safe) EXPECT_GT(d.trajectories[i].suffix->front(), 0.0);
}

TEST(InputScalesTest, StatesStandardizedAndScalesPositive) {
  const auto d = annotated_run(20);
  const auto s = input_scales(d);
  ASSERT_EQ(s.state_mean.size(), env::kStateChannels);
  double max_return = 0;
  for (const auto& t : d.trajectories) max_return = std::max(max_return, std::fabs(t.return_to_go->front()));
  EXPECT_EQ(s.reward_scale, max_return);
  EXPECT_GT(s.robustness_scale, 0.0);
  for (double v : s.state_std) EXPECT_GE(v, 0.0);
}

TEST(TrainTest, OneStepWritesLogAndCheckpoint) {
  const auto d = annotated_run(6);
  std::ostringstream log;
  auto result = train(d, small_config(1), &log);
  EXPECT_EQ(result.history.size(), 1u);
  std::istringstream lines(log.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "step,loss,nll,entropy");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("1,", 0), 0u);

  const auto path = (temp_dir("one_step") / "policy.json").string();
  policy::save_checkpoint(result.policy, {"run", d.spec, to_json(small_config(1))}, path);
  policy::CheckpointMeta meta;
  const auto loaded = policy::load_checkpoint(path, &meta);
  EXPECT_EQ(loaded.params(), result.policy.params());
  EXPECT_EQ(loaded.config(), result.policy.config());
  EXPECT_EQ(meta.env, "run");
}

TEST(TrainTest, OverfitsFourTrajectories) {
  const auto d = annotated_run(4, 20, 3);
  auto config = small_config(200);
  config.lr = 1e-2;
  const auto result = train(d, config);
  const double first = result.history.front().loss;
  const double last = result.history.back().loss;
  EXPECT_LE(last, 0.1 * first) << first << " -> " << last;
}

TEST(TrainTest, BitIdenticalAcrossRuns) {
  const auto d = annotated_run(8);
  const auto a = train(d, small_config(15));
  const auto b = train(d, small_config(15));
  EXPECT_EQ(a.policy.params(), b.policy.params());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
  auto other = small_config(15);
  other.seed = 1;
  EXPECT_FALSE(train(d, other).policy.params() == a.policy.params());
}

TEST(TrainTest, SafeOnlyWithoutSafeDataIsDataError) {
  const auto c = env::default_config(EnvKind::kRun);
  auto d = env::generate_dataset(c, 4, {{1.0, -0.5, 0.0}}, 0);
  data::annotate_dataset(d, env::builtin_spec(c));
  auto config = small_config(1);
  config.safe_only = true;
  EXPECT_THROW(train(d, config), DataError);
}

TEST(TrainTest, EvalHookFiresOnSchedule) {
  const auto d = annotated_run(4);
  auto config = small_config(6);
  config.eval_every = 2;
  std::vector<std::size_t> steps;
  train(d, config, nullptr, [&](std::size_t step, policy::Policy&) { steps.push_back(step); });
  EXPECT_EQ(steps, (std::vector<std::size_t>{2, 4, 6}));
}

TEST(TrainConfigTest, JsonRoundTripAndValidation) {
  auto c = small_config(7);
  c.safe_only = true;
  c.policy.layout = policy::TokenLayout::behavior_cloning();
  const auto back = train_config_from_json(to_json(c));
  EXPECT_EQ(back.steps, 7u);
  EXPECT_TRUE(back.safe_only);
  EXPECT_EQ(back.policy, c.policy);
  EXPECT_THROW(train_config_from_json("{\"steps\": 0}"), UsageError);
  EXPECT_THROW(train_config_from_json("{\"lr\": -1}"), UsageError);
  EXPECT_THROW(train_config_from_json("{\"steps\": \"many\"}"), UsageError);
  EXPECT_THROW(train_config_from_json("not json"), UsageError);
  EXPECT_EQ(train_config_from_json("{}").steps, 20000u);
}

}  // namespace
}  // namespace sdt::train
