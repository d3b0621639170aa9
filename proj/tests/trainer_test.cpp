// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "advf/attention_trace.hpp"
#include "advf/error.hpp"
#include "advf/instrument.hpp"
#include "advf/special_tokens.hpp"
#include "advf/trainer.hpp"
#include "support.hpp"

using namespace advf;
using namespace advf::testing;

namespace {

double mean(const std::vector<double>& v, std::size_t from, std::size_t to) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(from),
                         v.begin() + static_cast<std::ptrdiff_t>(to), 0.0) /
         static_cast<double>(to - from);
}

const Synthetic& three_langs() {
  static const Synthetic s = make_synthetic({60, 60, 15}, 3);
  return s;
}

template <typename T>
void pretrain_all(TransformerModel<T>& m, const Synthetic& s, std::size_t steps) {
  TrainConfig tc;
  tc.max_steps = steps;
  tc.batch_size = 4;
  tc.adam.lr = 1e-3;
  for (const auto& l : s.langs) {
    const auto seqs = s.code_of(l, Split::kTrain);
    train_language_adapter(m, l, seqs, tc);
  }
}

}  // namespace

TEST(Adam, HandComputedScalarStep) {
  ParamRegistry<double> reg;
  auto p = reg.add({"p", {1}, "g"}, Tensor<double>::from({1}, {0.5}, true));
  backward(sum(p));  // gradient 1
  const auto part = TrainablePartition::from_groups(reg, {"g"});
  OptimizerState<double> opt;
  opt.cfg.lr = 0.1;
  adam_step(opt, reg, part);
  // m = 0.1, v = 0.001, m_hat = 1, v_hat = 1.
  EXPECT_NEAR(p[0], 0.5 - 0.1 * 1.0 / (1.0 + 1e-8), 1e-12);
  EXPECT_EQ(opt.step, 1u);

  // Second step with the same gradient: m = 0.19, v = 0.001999.
  adam_step(opt, reg, part);
  const double mh = 0.19 / (1 - 0.81), vh = 0.001999 / (1 - 0.998001);
  EXPECT_NEAR(p[0], 0.5 - 0.1 / (1.0 + 1e-8) - 0.1 * mh / (std::sqrt(vh) + 1e-8), 1e-12);
}

TEST(Adam, ZeroGradientAndFrozenParamsUnchanged) {
  ParamRegistry<double> reg;
  auto a = reg.add({"a", {2}, "train"}, Tensor<double>::from({2}, {1.0, -2.0}, true));
  auto b = reg.add({"b", {2}, "frozen"}, Tensor<double>::from({2}, {3.0, 4.0}, true));
  a.zero_grad();
  backward(sum(b));  // erroneous gradient on a frozen parameter
  const auto part = TrainablePartition::from_groups(reg, {"train"});
  OptimizerState<double> opt;
  opt.cfg.lr = 0.5;
  adam_step(opt, reg, part);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(a[1], -2.0);
  EXPECT_EQ(b[0], 3.0);
  EXPECT_EQ(b[1], 4.0);
  EXPECT_EQ(opt.m.count("b"), 0u);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  ParamRegistry<double> reg;
  auto a = reg.add({"enc.bad", {1}, "g"}, Tensor<double>::from({1}, {1.0}, true));
  backward(sum(scale(a, std::numeric_limits<double>::infinity())));
  OptimizerState<double> opt;
  try {
    adam_step(opt, reg, TrainablePartition::from_groups(reg, {"g"}));
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("enc.bad"), std::string::npos);
  }
}

TEST(Partition, CoversEveryParameterOnce) {
  TransformerModel<float> m(small_config(300), 1);
  ensure_adapter(m, "py");
  const auto p = TrainablePartition::from_groups(m.params(), {group::adapter("py")});
  EXPECT_EQ(p.trainable().size() + p.frozen().size(), m.params().entries().size());
  for (const auto& n : p.trainable()) EXPECT_EQ(p.frozen().count(n), 0u);
  EXPECT_EQ(p.trainable().size(), 4u * small_config(300).n_layers);
}

TEST(Mlm, CeilingForcesOnePosition) {
  const std::vector<TokenId> one{42};
  const auto b = mlm_mask(one, 0.15, 100, 1);
  EXPECT_EQ(b.target[0], 42);
}

TEST(Mlm, DeterministicAndRates) {
  std::vector<TokenId> stream(10000);
  for (std::size_t i = 0; i < stream.size(); ++i) stream[i] = static_cast<TokenId>(10 + i % 80);
  const auto a = mlm_mask(stream, 0.15, 100, 7);
  const auto b = mlm_mask(stream, 0.15, 100, 7);
  EXPECT_EQ(a.input, b.input);
  EXPECT_EQ(a.target, b.target);
  std::size_t selected = 0, masked = 0, kept = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (a.target[i] == special::kIgnore) {
      EXPECT_EQ(a.input[i], stream[i]);
      continue;
    }
    ++selected;
    EXPECT_EQ(a.target[i], stream[i]);
    masked += a.input[i] == special::kMask;
    kept += a.input[i] == stream[i];
  }
  const double frac = static_cast<double>(selected) / stream.size();
  EXPECT_GE(frac, 0.14);
  EXPECT_LE(frac, 0.16);
  EXPECT_NEAR(static_cast<double>(masked) / selected, 0.8, 0.05);
  EXPECT_GT(kept, 0u);
  EXPECT_NE(mlm_mask(stream, 0.15, 100, 8).input, a.input);
}

TEST(Mlm, RateOutsideOpenIntervalIsConfigError) {
  const std::vector<TokenId> t{10, 11};
  EXPECT_THROW(mlm_mask(t, 0.0, 100, 1), ConfigError);
  EXPECT_THROW(mlm_mask(t, 1.0, 100, 1), ConfigError);
}

TEST(Prepare, MnpNeedsNames) {
  Corpus c;
  c.examples.push_back({"x", "def f(): pass", "does f", std::nullopt});
  c.train = {0};
  const auto v = train_bpe(std::vector<std::string>{"def f(): pass"}, 270);
  EXPECT_THROW(prepare_examples(c, c.train, v, Task::kMnp, 16), DataError);
  const auto s = prepare_examples(c, c.train, v, Task::kSummarization, 16);
  EXPECT_EQ(s[0].reference, "does f");
}

TEST(LanguageAdapter, ZeroStepsAndFreezeContract) {
  const auto& s = three_langs();
  TransformerModel<float> m(small_config(s.vocab.size()), 2);
  ensure_adapter(m, s.langs[0]);
  const auto seqs = s.code_of(s.langs[0], Split::kTrain);
  TransformerModel<float> ref(small_config(s.vocab.size()), 2);
  ensure_adapter(ref, s.langs[0]);

  TrainConfig tc;
  tc.max_steps = 0;
  train_language_adapter(m, s.langs[0], seqs, tc);
  EXPECT_TRUE(same_params(m, ref));

  const auto part = TrainablePartition::from_groups(m.params(), {group::adapter(s.langs[0])});
  const auto before = part.frozen_checksums(m.params());
  tc.max_steps = 20;
  tc.adam.lr = 1e-3;
  train_language_adapter(m, s.langs[0], seqs, tc);
  EXPECT_EQ(part.frozen_checksums(m.params()), before);
  EXPECT_FALSE(same_params(m, ref));
  EXPECT_EQ(m.slots().mechanism, Mechanism::kNone);
  EXPECT_THROW(train_language_adapter(m, "empty", std::span<const std::vector<TokenId>>{}, tc),
               DataError);
}

TEST(LanguageAdapter, MlmLossDecreases) {
  const auto s = make_synthetic({20, 20}, 5);
  std::vector<std::vector<TokenId>> seqs;
  for (std::size_t i = 0; i < 16; ++i) seqs.push_back(s.vocab.encode(s.corpus.examples[i].code));
  for (std::uint64_t seed : {1, 2, 3}) {
    TransformerModel<float> m(small_config(s.vocab.size()), seed);
    TrainConfig tc;
    tc.seed = seed;
    tc.max_steps = 500;
    tc.batch_size = 4;
    tc.adam.lr = 1e-3;
    const auto r = train_language_adapter(m, "lang", seqs, tc);
    ASSERT_EQ(r.losses.size(), 500u);
    EXPECT_LT(mean(r.losses, 450, 500), mean(r.losses, 0, 50)) << "seed " << seed;
  }
}

TEST(Finetune, TaskAdapterFreezesBackbone) {
  const auto& s = three_langs();
  TransformerModel<float> m(small_config(s.vocab.size()), 3);
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  attach_adapter(m, "task");
  const auto part = TrainablePartition::from_groups(
      m.params(), {group::adapter("task"), group::kDecoder});
  const auto before = part.frozen_checksums(m.params());
  TrainConfig tc;
  tc.max_steps = 100;
  tc.batch_size = 2;
  tc.adam.lr = 1e-3;
  const auto r = finetune(m, FinetuneMechanism::kTaskAdapter, data, tc);
  EXPECT_EQ(part.frozen_checksums(m.params()), before);
  EXPECT_EQ(r.records.back().phase, "finetune");
}

TEST(Finetune, ZeroLearningRateLeavesEverythingUnchanged) {
  const auto& s = three_langs();
  const auto data = s.examples(Split::kTrain, Task::kMnp, 48);
  for (auto mech : {FinetuneMechanism::kFull, FinetuneMechanism::kLora,
                    FinetuneMechanism::kTaskAdapter}) {
    TransformerModel<float> m(small_config(s.vocab.size()), 4), ref(small_config(s.vocab.size()), 4);
    TrainConfig tc;
    tc.max_steps = 5;
    tc.batch_size = 2;
    tc.adam.lr = 0.0;
    finetune(m, mech, data, tc);
    if (mech == FinetuneMechanism::kLora) attach_lora(ref);
    if (mech == FinetuneMechanism::kTaskAdapter) attach_adapter(ref, "task");
    EXPECT_TRUE(same_params(m, ref));
  }
}

TEST(Finetune, LoraFreezesBackboneAndLearns) {
  const auto& s = three_langs();
  TransformerModel<float> m(small_config(s.vocab.size()), 5);
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  attach_lora(m);
  const auto part =
      TrainablePartition::from_groups(m.params(), {group::kLora, group::kDecoder});
  const auto before = part.frozen_checksums(m.params());
  const auto b_before = m.params().get("lora.layer0.q.b").clone();
  TrainConfig tc;
  tc.max_steps = 30;
  tc.batch_size = 2;
  tc.adam.lr = 1e-3;
  finetune(m, FinetuneMechanism::kLora, data, tc);
  EXPECT_EQ(part.frozen_checksums(m.params()), before);
  EXPECT_FALSE(same_values(m.params().get("lora.layer0.q.b"), b_before));
  EXPECT_THROW(finetune(m, FinetuneMechanism::kTaskAdapter, data, tc), UsageError);
}

TEST(Fusion, FreezesAdaptersAndReducesLoss) {
  const auto& s = three_langs();
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  for (std::uint64_t seed : {1, 2, 3}) {
    TransformerModel<float> m(small_config(s.vocab.size()), seed);
    pretrain_all(m, s, 20);
    attach_fusion(m, s.langs);
    const auto part =
        TrainablePartition::from_groups(m.params(), {group::kFusion, group::kDecoder});
    const auto before = part.frozen_checksums(m.params());
    TrainConfig tc;
    tc.seed = seed;
    tc.max_steps = 500;
    tc.batch_size = 2;
    tc.adam.lr = 1e-3;
    const auto r = train_fusion(m, s.langs, data, tc);
    EXPECT_EQ(part.frozen_checksums(m.params()), before);
    EXPECT_LT(mean(r.losses, 450, 500), 0.5 * mean(r.losses, 0, 50)) << "seed " << seed;
    // Languages are interleaved round-robin.
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(r.records[i].language, s.langs[i % 3]);
  }
}

TEST(Fusion, SingleAdapterHasUnitAttention) {
  const auto& s = three_langs();
  TransformerModel<float> m(small_config(s.vocab.size()), 6);
  ensure_adapter(m, s.langs[0]);
  std::vector<Seq2SeqExample> data;
  for (auto& e : s.examples(Split::kTrain, Task::kSummarization, 48))
    if (e.lang == s.langs[0]) data.push_back(e);
  TrainConfig tc;
  tc.max_steps = 5;
  tc.batch_size = 2;
  tc.adam.lr = 1e-3;
  TrainHooks<float> hooks;
  hooks.trace_batches = true;
  hooks.after_backward = [](const StepContext<float>& ctx) {
    ASSERT_NE(ctx.trace, nullptr);
    for (std::size_t l = 0; l < ctx.trace->n_layers(); ++l)
      EXPECT_EQ(ctx.trace->sum(l, 0), static_cast<double>(ctx.trace->token_count(l)));
  };
  train_fusion(m, {s.langs[0]}, data, tc, hooks);
}

TEST(AdvFusion, PhaseOneExcludesBatchLanguage) {
  const auto& s = three_langs();
  TransformerModel<double> m(small_config(s.vocab.size()), 7);
  pretrain_all(m, s, 10);
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  PhaseSchedule sched;
  sched.phase1_steps = 6;
  sched.phase2_steps = 6;
  TrainConfig tc;
  tc.max_steps = 12;
  tc.batch_size = 2;
  tc.adam.lr = 1e-3;
  TrainHooks<double> hooks;
  hooks.trace_batches = true;
  std::size_t phase1 = 0, phase2_positive = 0;
  hooks.after_backward = [&](const StepContext<double>& ctx) {
    const auto& tags = m.slots().stack.tags();
    const auto lang = std::find(tags.begin(), tags.end(), ctx.language) - tags.begin();
    const auto& tr = *ctx.trace;
    if (ctx.step <= 6) {
      ++phase1;
      EXPECT_EQ(ctx.phase, 1);
      ASSERT_TRUE(ctx.options.excluded.has_value());
      EXPECT_EQ(*ctx.options.excluded, static_cast<std::size_t>(lang));
      for (std::size_t l = 0; l < tr.n_layers(); ++l) {
        EXPECT_EQ(tr.sum(l, lang), 0.0);
        double total = 0.0;
        for (std::size_t n = 0; n < tr.n_adapters(); ++n) total += tr.sum(l, n);
        EXPECT_NEAR(total / tr.token_count(l), 1.0, 1e-6);
      }
      for (const auto& e : m.params().entries()) {
        if (e.group == group::adapter(ctx.language) && e.tensor.has_grad()) {
          for (double g : e.tensor.grad()) EXPECT_EQ(g, 0.0);
        }
      }
      auto p = m.params().get("adapter." + ctx.language + ".layer0.up");
      const double base = ctx.batch_loss();
      for (std::size_t i = 0; i < 5; ++i) {
        const double old = p[i];
        p.mutable_values()[i] = old + 1e-3;
        EXPECT_EQ(ctx.batch_loss(), base);
        p.mutable_values()[i] = old;
      }
    } else {
      EXPECT_EQ(ctx.phase, 2);
      EXPECT_FALSE(ctx.options.excluded.has_value());
      phase2_positive += tr.sum(0, lang) > 0.0;
    }
  };
  const auto r = train_advfusion(m, s.langs, data, sched, tc, hooks);
  EXPECT_EQ(phase1, 6u);
  EXPECT_EQ(phase2_positive, 6u);
  EXPECT_EQ(r.records[5].phase, "phase1");
  EXPECT_EQ(r.records[6].phase, "phase2");
}

TEST(AdvFusion, ZeroPhaseOneMatchesFusion) {
  const auto& s = three_langs();
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  TransformerModel<float> a(small_config(s.vocab.size()), 8), b(small_config(s.vocab.size()), 8);
  pretrain_all(a, s, 5);
  pretrain_all(b, s, 5);
  TrainConfig tc;
  tc.max_steps = 12;
  tc.batch_size = 2;
  tc.adam.lr = 1e-3;
  PhaseSchedule sched;
  sched.phase2_steps = 12;
  const auto ra = train_advfusion(a, s.langs, data, sched, tc);
  const auto rb = train_fusion(b, s.langs, data, tc);
  EXPECT_TRUE(same_params(a, b));
  EXPECT_EQ(ra.losses, rb.losses);
}

TEST(AdvFusion, FreezeContractAcrossBothPhases) {
  const auto& s = three_langs();
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  for (auto mode : {ExclusionMode::kExclude, ExclusionMode::kZeroWeights}) {
    TransformerModel<float> m(small_config(s.vocab.size()), 9);
    pretrain_all(m, s, 5);
    attach_fusion(m, s.langs, FusionMode::kAdvFusion);
    const auto part =
        TrainablePartition::from_groups(m.params(), {group::kFusion, group::kDecoder});
    const auto before = part.frozen_checksums(m.params());
    TrainConfig tc;
    tc.batch_size = 2;
    tc.adam.lr = 1e-3;
    PhaseSchedule sched{10, 10, mode};
    train_advfusion(m, s.langs, data, sched, tc);
    EXPECT_EQ(part.frozen_checksums(m.params()), before);
  }
}

TEST(AdvFusion, Errors) {
  const auto& s = three_langs();
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  TransformerModel<float> m(small_config(s.vocab.size()), 10);
  pretrain_all(m, s, 1);
  TrainConfig tc;
  PhaseSchedule sched{2, 2, ExclusionMode::kExclude};
  EXPECT_THROW(train_advfusion(m, {s.langs[0]}, data, sched, tc), ConfigError);
  EXPECT_THROW(train_advfusion(m, {s.langs[0], s.langs[1]}, data, sched, tc), DataError);
}

TEST(Training, DeterministicUnderSeed) {
  const auto& s = three_langs();
  const auto data = s.examples(Split::kTrain, Task::kSummarization, 48);
  auto run = [&] {
    TransformerModel<float> m(small_config(s.vocab.size()), 11);
    pretrain_all(m, s, 5);
    TrainConfig tc;
    tc.seed = 4;
    tc.batch_size = 2;
    tc.adam.lr = 1e-3;
    PhaseSchedule sched{4, 4, ExclusionMode::kExclude};
    train_advfusion(m, s.langs, data, sched, tc);
    return m;
  };
  const auto a = run();
  const auto b = run();
  EXPECT_TRUE(same_params(a, b));
}
