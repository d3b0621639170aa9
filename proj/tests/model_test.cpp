// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>

#include "advf/error.hpp"
#include "advf/instrument.hpp"
#include "advf/model.hpp"
#include "advf/rng.hpp"
#include "advf/special_tokens.hpp"

using namespace advf;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.n_layers = 2;
  c.hidden = 16;
  c.n_heads = 2;
  c.ff_dim = 32;
  c.vocab = 40;
  c.max_len = 12;
  c.n_decoder_layers = 1;
  c.lora_rank = 4;
  return c;
}

std::vector<TokenId> tokens(std::size_t n, std::uint64_t seed = 3, std::size_t vocab = 40) {
  Rng rng(seed, "tokens");
  std::vector<TokenId> out(n);
  for (auto& t : out) t = static_cast<TokenId>(special::kCount + rng.below(vocab - special::kCount));
  return out;
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.values().data(), b.values().data(), a.numel() * sizeof(T)) == 0;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Closed form of the backbone size, written out independently of the specs.
std::size_t backbone_closed_form(const ModelConfig& c) {
  const std::size_t h = c.hidden, f = c.ff_dim, V = c.vocab, L = c.max_len;
  const std::size_t attn = 4 * h * h + 4 * h, ln = 2 * h, ff = 2 * h * f + f + h;
  const std::size_t enc = V * h + L * h + ln + c.n_layers * (attn + ln + ff + ln) + V;
  const std::size_t dec = V * h + L * h + ln + c.n_decoder_layers * (2 * attn + 3 * ln + ff) +
                          h * V + V;
  return enc + dec;
}

}  // namespace

TEST(ModelConfig, RejectsBadShapes) {
  auto c = tiny();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.max_len = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.hidden = 0;
  EXPECT_THROW(TransformerModel<float>(c, 1), ConfigError);
  EXPECT_NO_THROW(ModelConfig::reference_shape().validate());
}

TEST(ParamCount, AdapterPerLayerClosedForm) {
  ModelConfig c;  // h = 64, d = 8
  EXPECT_EQ(c.bottleneck(), 8u);
  EXPECT_EQ(count_specs(adapter_specs(c, "py")), c.n_layers * 1096u);
}

TEST(ParamCount, RegistryMatchesClosedForm) {
  const auto c = tiny();
  TransformerModel<float> m(c, 7);
  const auto all = m.count_parameters(ParamFilter::kAll);
  EXPECT_EQ(all.all, backbone_closed_form(c));
  EXPECT_EQ(count_specs(backbone_specs(c)), backbone_closed_form(c));
  EXPECT_EQ(all.trainable + all.frozen, all.all);
  EXPECT_EQ(m.count_parameters(ParamFilter::kTrainable).trainable, 0u);

  attach_fusion(m, {ensure_adapter(m, "a").tag, ensure_adapter(m, "b").tag});
  const auto after = m.count_parameters();
  EXPECT_EQ(after.all, backbone_closed_form(c) + 2 * count_specs(adapter_specs(c, "a")) +
                           c.n_layers * 3 * c.hidden * c.hidden);
  EXPECT_EQ(after.by_group.at(group::adapter("a")), count_specs(adapter_specs(c, "a")));
  EXPECT_EQ(after.by_group.at(group::kFusion), count_specs(fusion_specs(c)));

  m.params().set_all_trainable(true);
  const auto t = m.count_parameters();
  EXPECT_EQ(t.trainable, t.all);
  EXPECT_EQ(t.frozen, 0u);
}

TEST(ParamCount, DeskAdapterRatioBelowTwoPercent) {
  ModelConfig c;
  const double adapter = static_cast<double>(count_specs(adapter_specs(c, "task")));
  const double total = static_cast<double>(count_specs(backbone_specs(c))) + adapter;
  EXPECT_LT(adapter / total, 0.02);
}

TEST(ParamCount, FullScaleShapes) {
  auto c = ModelConfig::reference_shape();
  EXPECT_EQ(count_specs(adapter_specs(c, "task")),
            12u * (2 * 768 * c.bottleneck() + c.bottleneck() + 768));
  c.adapter_dim = 48;
  EXPECT_EQ(count_specs(adapter_specs(c, "task")), 894528u);
  EXPECT_EQ(count_specs(backbone_specs(c)), backbone_closed_form(c));
}

TEST(Encode, RejectsBadInput) {
  TransformerModel<float> m(tiny(), 1);
  std::vector<TokenId> bad{6, 40};
  EXPECT_THROW(m.encode(bad), DataError);
  std::vector<TokenId> neg{6, -1};
  EXPECT_THROW(m.encode(neg), DataError);
  EXPECT_THROW(m.encode(std::vector<TokenId>{}), DataError);
  const auto long_input = tokens(20);
  EXPECT_THROW(m.encode(long_input), DataError);
  EncodeOptions o;
  o.truncate = true;
  EXPECT_EQ(m.encode(long_input, o).states.dim(0), tiny().max_len);
}

TEST(Encode, DeterministicAcrossInstances) {
  const auto x = tokens(9);
  TransformerModel<float> a(tiny(), 42), b(tiny(), 42), c(tiny(), 43);
  const auto sa = a.encode(x).states;
  EXPECT_TRUE(bitwise_equal(sa, a.encode(x).states));
  EXPECT_TRUE(bitwise_equal(sa, b.encode(x).states));
  EXPECT_FALSE(bitwise_equal(sa, c.encode(x).states));
}

TEST(Encode, ActivationsAreTokensByHidden) {
  TransformerModel<double> m(tiny(), 5);
  attach_fusion(m, {ensure_adapter(m, "a").tag, ensure_adapter(m, "b").tag});
  EncodeOptions o;
  o.keep_activations = true;
  const auto out = m.encode(tokens(7), o);
  ASSERT_EQ(out.layers.size(), tiny().n_layers);
  for (const auto& l : out.layers) {
    EXPECT_EQ(l.h.shape(), (Shape{7, 16}));
    EXPECT_EQ(l.r.shape(), (Shape{7, 16}));
    EXPECT_EQ(l.out.shape(), (Shape{7, 16}));
    for (const auto& z : l.z) EXPECT_EQ(z.shape(), (Shape{7, 16}));
    EXPECT_EQ(l.attention.size(), 7u * 2);
  }
}

TEST(Encode, IdentityAtInitForEveryMechanism) {
  const auto x = tokens(10);
  TransformerModel<double> m(tiny(), 11);
  const auto base = m.encode(x).states;

  attach_adapter(m, "task");
  EXPECT_LE(max_abs_diff(base, m.encode(x).states), 1e-7);
  detach(m);
  attach_lora(m);
  EXPECT_LE(max_abs_diff(base, m.encode(x).states), 1e-7);
  detach(m);
  attach_fusion(m, {ensure_adapter(m, "a").tag, ensure_adapter(m, "b").tag,
                    ensure_adapter(m, "c").tag});
  EXPECT_LE(max_abs_diff(base, m.encode(x).states), 1e-7);
  detach(m);
  EXPECT_TRUE(bitwise_equal(base, m.encode(x).states));
}

TEST(Encode, EmptySlotsMatchUninstrumentedModel) {
  const auto x = tokens(6);
  TransformerModel<float> plain(tiny(), 9), touched(tiny(), 9);
  attach_adapter(touched, "task");
  auto up = touched.params().get("adapter.task.layer0.up");
  for (auto& v : up.mutable_values()) v = 0.3f;
  detach(touched);
  EXPECT_TRUE(bitwise_equal(plain.encode(x).states, touched.encode(x).states));
}

TEST(Attach, DoubleAttachIsUsageError) {
  TransformerModel<float> m(tiny(), 1);
  attach_adapter(m, "task");
  EXPECT_THROW(attach_lora(m), UsageError);
  EXPECT_THROW(attach_adapter(m, "task"), UsageError);
  detach(m);
  EXPECT_NO_THROW(attach_lora(m));
  EXPECT_THROW(attach_fusion(m, {"x"}), UsageError);
  detach(m);
  EXPECT_THROW(attach_fusion(m, {"never-registered"}), LookupError);
}

TEST(Decode, GreedyMatchesPerStepArgmax) {
  auto c = tiny();
  c.max_len = 10;
  TransformerModel<double> m(c, 21);
  // Sharpen the output head so the argmax is well separated from ties.
  auto w = m.params().get("dec.out.weight");
  for (auto& v : w.mutable_values()) v *= 40.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto enc = m.encode(tokens(8, s)).states;
    const auto got = m.decode_generate(enc, 8);

    std::vector<TokenId> prefix{special::kBos}, oracle;
    while (oracle.size() < 8) {
      const auto logits = m.decoder_logits(enc, prefix);
      TokenId best = 0;
      double best_v = -1e300;
      for (std::size_t v = 0; v < c.vocab; ++v) {
        const double x = logits[(prefix.size() - 1) * c.vocab + v];
        if (x > best_v) {
          best_v = x;
          best = static_cast<TokenId>(v);
        }
      }
      oracle.push_back(best);
      if (best == special::kEos) break;
      prefix.push_back(best);
    }
    EXPECT_EQ(got, oracle) << "seed " << s;
  }
}

TEST(Decode, ForcedEosStopsAfterOneToken) {
  TransformerModel<float> m(tiny(), 2);
  auto b = m.params().get("dec.out.bias");
  b.mutable_values()[special::kEos] = 10.0f;
  const auto enc = m.encode(tokens(5)).states;
  EXPECT_EQ(m.decode_generate(enc, 6), std::vector<TokenId>{special::kEos});
}

TEST(Decode, MaxNewBounds) {
  TransformerModel<float> m(tiny(), 2);
  auto b = m.params().get("dec.out.bias");
  b.mutable_values()[7] = 10.0f;  // never EOS
  const auto enc = m.encode(tokens(5)).states;
  EXPECT_EQ(m.decode_generate(enc, 1).size(), 1u);
  EXPECT_EQ(m.decode_generate(enc, 4), (std::vector<TokenId>{7, 7, 7, 7}));
  EXPECT_THROW(m.decode_generate(enc, 0), UsageError);
}

TEST(Registry, LookupAndDuplicates) {
  TransformerModel<float> m(tiny(), 1);
  EXPECT_THROW(m.params().get("nope"), LookupError);
  EXPECT_THROW(m.create_param({"enc.tok_embed", {1}, group::kBase}), UsageError);
  const auto groups = m.params().groups();
  EXPECT_NE(std::find(groups.begin(), groups.end(), group::kBase), groups.end());
  EXPECT_NE(std::find(groups.begin(), groups.end(), group::kDecoder), groups.end());
}
