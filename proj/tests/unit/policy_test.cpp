#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "sdt/ad/tape.hpp"
#include "sdt/policy/policy.hpp"
#include "support/gradcheck.hpp"
#include "support/policy_fixtures.hpp"

namespace sdt::policy {
namespace {

using testing::random_batch;
using testing::randomize;
using testing::tiny_config;

std::vector<double> means(Policy& p, const TokenBatch& tb) {
  ad::Tape t;
  const auto v = t.value(p.forward(t, tb).mean);
  return {v.begin(), v.end()};
}

TEST(TokenLayoutTest, Orders) {
  EXPECT_EQ(TokenLayout::sdt().modalities(),
            (std::vector<Modality>{Modality::kSuffix, Modality::kPrefix, Modality::kReturn, Modality::kState,
                                   Modality::kAction}));
  TokenLayout with_rp;
  with_rp.reward_prefix = true;
  EXPECT_EQ(with_rp.tokens_per_step(), 6u);
  EXPECT_EQ(with_rp.position(Modality::kRewardPrefix), 2u);
  EXPECT_EQ(TokenLayout::behavior_cloning().tokens_per_step(), 2u);
  TokenLayout no_suffix;
  no_suffix.suffix = false;
  EXPECT_EQ(no_suffix.position(Modality::kState), 2u);
  EXPECT_THROW(no_suffix.position(Modality::kSuffix), UsageError);
}

TEST(PolicyTest, LossClosedFormAtMean) {
  PolicyConfig c = tiny_config(1);
  c.action_dim = 1;
  c.entropy_weight = 0.0;
  Policy p(c, 1);
  TokenBatch tb(1, 1, c.state_dim, 1);
  tb.mask[0] = 1;
  ad::Tape t;
  const double loss0 = t.item(p.loss(t, tb).loss);
  EXPECT_NEAR(loss0, 0.918939, 1e-6);
  EXPECT_NEAR(loss0, 0.5 * std::log(2 * std::numbers::pi), 1e-15);

  c.entropy_weight = 0.3;
  Policy q(c, 1);
  ad::Tape t2;
  const double loss1 = t2.item(q.loss(t2, tb).loss);
  EXPECT_NEAR(loss0 - loss1, 0.3 * 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-14);
}

TEST(PolicyTest, ZeroHeadGivesZeroMeanAndInitialStd) {
  PolicyConfig c = tiny_config();
  c.init_log_std = -0.7;
  for (auto arch : {Architecture::kTransformer, Architecture::kMlp}) {
    c.architecture = arch;
    Policy p(c, 5);
    std::mt19937_64 rng(1);
    const auto tb = random_batch(c, 4, rng);
    for (double m : means(p, tb)) EXPECT_EQ(m, 0.0);
    const auto pred = p.predict(tb, c.context - 1);
    for (double s : pred.std) EXPECT_DOUBLE_EQ(s, std::exp(-0.7));
  }
}

TEST(PolicyTest, CausalityUnderFutureAndCurrentActionPerturbation) {
  const PolicyConfig c = tiny_config(4);
  Policy p(c, 2);
  randomize(p, 3);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, c.context - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto base = random_batch(c, 3, rng);
    const auto before = means(p, base);
    const std::size_t t = pick(rng);
    auto perturbed = base;
    for (std::size_t b = 0; b < base.batch; ++b) {
      for (std::size_t k = t + 1; k < c.context; ++k) {
        const auto i = perturbed.slot(b, k);
        perturbed.suffix[i] += gauss(rng);
        perturbed.prefix[i] += gauss(rng);
        perturbed.return_to_go[i] += gauss(rng);
        for (std::size_t s = 0; s < c.state_dim; ++s) perturbed.states[i * c.state_dim + s] += gauss(rng);
        for (std::size_t a = 0; a < c.action_dim; ++a) perturbed.actions[i * c.action_dim + a] += gauss(rng);
      }
      const auto i = perturbed.slot(b, t);
      for (std::size_t a = 0; a < c.action_dim; ++a) perturbed.actions[i * c.action_dim + a] += gauss(rng);
    }
    const auto after = means(p, perturbed);
    for (std::size_t b = 0; b < base.batch; ++b) {
      for (std::size_t k = 0; k <= t; ++k) {
        for (std::size_t a = 0; a < c.action_dim; ++a) {
          const auto i = base.slot(b, k) * c.action_dim + a;
          ASSERT_EQ(before[i], after[i]) << "trial " << trial << " item " << b << " slot " << k;
        }
      }
    }
  }
}

TEST(PolicyTest, OutputsDependOnCurrentConditioning) {
  const PolicyConfig c = tiny_config(3);
  Policy p(c, 2);
  randomize(p, 3);
  std::mt19937_64 rng(4);
  const auto base = random_batch(c, 1, rng);
  auto changed = base;
  changed.suffix[2] += 1.0;
  EXPECT_NE(means(p, base)[4], means(p, changed)[4]);
}

TEST(PolicyTest, SingleStepContextMatchesFirstSlotOfLongerContext) {
  PolicyConfig c3 = tiny_config(3);
  Policy p3(c3, 8);
  randomize(p3, 9);
  PolicyConfig c1 = c3;
  c1.context = 1;
  Policy p1(c1, p3.params());
  std::mt19937_64 rng(10);
  const auto tb3 = random_batch(c3, 1, rng);  // item 0 is unpadded
  TokenBatch tb1(1, 1, c3.state_dim, c3.action_dim);
  tb1.mask[0] = 1;
  tb1.timesteps[0] = tb3.timesteps[0];
  tb1.suffix[0] = tb3.suffix[0];
  tb1.prefix[0] = tb3.prefix[0];
  tb1.return_to_go[0] = tb3.return_to_go[0];
  std::copy_n(tb3.states.begin(), c3.state_dim, tb1.states.begin());
  std::copy_n(tb3.actions.begin(), c3.action_dim, tb1.actions.begin());
  const auto m3 = means(p3, tb3);
  const auto m1 = means(p1, tb1);
  for (std::size_t a = 0; a < c3.action_dim; ++a) EXPECT_EQ(m1[a], m3[a]);
}

TEST(PolicyTest, PaddingContributesNothingToLoss) {
  const PolicyConfig c = tiny_config(3);
  Policy p(c, 2);
  randomize(p, 3);
  std::mt19937_64 rng(4);
  auto tb = random_batch(c, 3, rng);
  ad::Tape t1;
  const double l1 = t1.item(p.loss(t1, tb).loss);
  // Item 2 has its first two slots padded; scribble over them.
  for (std::size_t k = 0; k < 2; ++k) {
    const auto i = tb.slot(2, k);
    tb.suffix[i] = 99;
    tb.return_to_go[i] = -99;
    tb.actions[i * c.action_dim] = 5;
    tb.states[i * c.state_dim] = 7;
  }
  ad::Tape t2;
  EXPECT_EQ(t2.item(p.loss(t2, tb).loss), l1);
}

TEST(PolicyTest, FullLossGradientMatchesFiniteDifferences) {
  PolicyConfig c = tiny_config(3);
  c.heads = 1;
  for (auto arch : {Architecture::kTransformer, Architecture::kMlp}) {
    c.architecture = arch;
    Policy p(c, 11);
    randomize(p, 12);
    std::mt19937_64 rng(13);
    const auto tb = random_batch(c, 3, rng);
    const auto r = testing::grad_check(p.params(), [&](ad::Tape& t) { return p.loss(t, tb).loss; });
    EXPECT_LT(r.max_rel_error, 1e-4) << "worst " << r.worst;
  }
}

TEST(PolicyTest, MlpIsPermutationEquivariant) {
  PolicyConfig c = tiny_config(1);
  c.architecture = Architecture::kMlp;
  Policy p(c, 1);
  randomize(p, 2);
  std::mt19937_64 rng(3);
  const auto tb = random_batch(c, 4, rng);
  auto swapped = tb;
  auto swap_items = [&](TokenBatch& x, std::size_t i, std::size_t j) {
    std::swap(x.suffix[i], x.suffix[j]);
    std::swap(x.prefix[i], x.prefix[j]);
    std::swap(x.return_to_go[i], x.return_to_go[j]);
    std::swap(x.timesteps[i], x.timesteps[j]);
    std::swap(x.mask[i], x.mask[j]);
    for (std::size_t s = 0; s < c.state_dim; ++s) std::swap(x.states[i * c.state_dim + s], x.states[j * c.state_dim + s]);
    for (std::size_t a = 0; a < c.action_dim; ++a) {
      std::swap(x.actions[i * c.action_dim + a], x.actions[j * c.action_dim + a]);
    }
  };
  swap_items(swapped, 0, 3);
  const auto m = means(p, tb), ms = means(p, swapped);
  for (std::size_t a = 0; a < c.action_dim; ++a) {
    EXPECT_EQ(m[a], ms[3 * c.action_dim + a]);
    EXPECT_EQ(m[3 * c.action_dim + a], ms[a]);
    EXPECT_EQ(m[c.action_dim + a], ms[c.action_dim + a]);
  }
}

TEST(PolicyTest, AblationLayoutsRunEndToEnd) {
  for (TokenLayout layout : {TokenLayout{false, true, false, true}, TokenLayout{true, false, false, true},
                             TokenLayout{true, true, true, true}, TokenLayout::behavior_cloning()}) {
    PolicyConfig c = tiny_config(3);
    c.layout = layout;
    Policy p(c, 1);
    std::mt19937_64 rng(2);
    ad::Tape t;
    const auto terms = p.loss(t, random_batch(c, 2, rng));
    t.backward(terms.loss);
    EXPECT_TRUE(std::isfinite(terms.nll));
  }
}

TEST(PolicyTest, ShapeMismatchIsReported) {
  const PolicyConfig c = tiny_config(3);
  Policy p(c, 1);
  TokenBatch wrong(1, 2, c.state_dim, c.action_dim);
  ad::Tape t;
  EXPECT_THROW(p.forward(t, wrong), ad::ShapeError);
}

TEST(PolicyTest, EntropyGrowsWithStd) {
  PolicyConfig c = tiny_config(1);
  c.action_dim = 1;
  double previous = -1e9;
  for (double ls : {-2.0, -1.0, 0.0, 1.0}) {
    c.init_log_std = ls;
    Policy p(c, 1);
    TokenBatch tb(1, 1, c.state_dim, 1);
    tb.mask[0] = 1;
    ad::Tape t;
    const auto terms = p.loss(t, tb);
    EXPECT_GT(terms.entropy, previous);
    previous = terms.entropy;
  }
}

TEST(PolicyTest, CheckpointRoundTrip) {
  const PolicyConfig c = tiny_config(3);
  Policy p(c, 4);
  randomize(p, 5);
  const auto dir = std::filesystem::temp_directory_path() / "sdt_policy_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "ckpt.json").string();
  save_checkpoint(p, {"run", "G(x < 1)", "{\"steps\": 3}"}, path);
  CheckpointMeta meta;
  Policy q = load_checkpoint(path, &meta);
  EXPECT_EQ(q.config(), p.config());
  EXPECT_EQ(q.params(), p.params());
  EXPECT_EQ(meta.env, "run");
  EXPECT_EQ(meta.spec, "G(x < 1)");
  std::mt19937_64 rng(6);
  const auto tb = random_batch(c, 2, rng);
  EXPECT_EQ(means(p, tb), means(q, tb));

  PolicyConfig other = c;
  other.embed_dim = 4;
  other.heads = 1;
  EXPECT_THROW(Policy(other, p.params()), DataError);
}

}  // namespace
}  // namespace sdt::policy
