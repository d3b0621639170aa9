// SPDX-License-Identifier: Apache-2.0
#include "advf/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "advf/attention_trace.hpp"
#include "advf/error.hpp"
#include "advf/rng.hpp"
#include "advf/special_tokens.hpp"

namespace advf {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model config: ") + name + " must be positive");
  };
  positive(n_layers, "n_layers");
  positive(hidden, "hidden");
  positive(n_heads, "n_heads");
  positive(ff_dim, "ff_dim");
  positive(vocab, "vocab");
  positive(n_decoder_layers, "n_decoder_layers");
  positive(lora_rank, "lora_rank");
  if (hidden % n_heads != 0)
    throw ConfigError("model config: hidden " + std::to_string(hidden) +
                      " is not divisible by n_heads " + std::to_string(n_heads));
  if (max_len < 2) throw ConfigError("model config: max_len must be at least 2");
  if (vocab <= static_cast<std::size_t>(special::kCount))
    throw ConfigError("model config: vocab must exceed the special-token count");
  if (bottleneck() == 0 || bottleneck() >= hidden)
    throw ConfigError("model config: adapter dimension " + std::to_string(bottleneck()) +
                      " must be in [1, hidden)");
  if (lora_rank >= hidden)
    throw ConfigError("model config: lora rank " + std::to_string(lora_rank) +
                      " must be below hidden " + std::to_string(hidden));
  if (!(ln_eps > 0.0)) throw ConfigError("model config: ln_eps must be positive");
}

ModelConfig ModelConfig::reference_shape() {
  ModelConfig c;
  c.n_layers = 12;
  c.hidden = 768;
  c.n_heads = 12;
  c.ff_dim = 3072;
  c.vocab = 50265;
  c.max_len = 514;
  c.n_decoder_layers = 6;
  c.adapter_dim = 96;
  return c;
}

namespace {

void push_attention(std::vector<ParamSpec>& out, const std::string& p, std::size_t h,
                    const std::string& g) {
  for (const char* m : {"q", "k", "v", "o"}) {
    out.push_back({p + ".w" + m, {h, h}, g, Init::kUniform});
    out.push_back({p + ".b" + m, {h}, g, Init::kZeros});
  }
}

void push_ln(std::vector<ParamSpec>& out, const std::string& p, std::size_t h,
             const std::string& g) {
  out.push_back({p + ".gain", {h}, g, Init::kOnes});
  out.push_back({p + ".bias", {h}, g, Init::kZeros});
}

void push_ff(std::vector<ParamSpec>& out, const std::string& p, std::size_t h, std::size_t f,
             const std::string& g) {
  out.push_back({p + ".w1", {h, f}, g, Init::kUniform});
  out.push_back({p + ".b1", {f}, g, Init::kZeros});
  out.push_back({p + ".w2", {f, h}, g, Init::kUniform});
  out.push_back({p + ".b2", {h}, g, Init::kZeros});
}

std::string layer_prefix(const char* side, std::size_t l) {
  return std::string(side) + ".layer" + std::to_string(l);
}

}  // namespace

std::vector<ParamSpec> backbone_specs(const ModelConfig& c) {
  std::vector<ParamSpec> s;
  const std::string base = group::kBase;
  const std::string dec = group::kDecoder;
  s.push_back({"enc.tok_embed", {c.vocab, c.hidden}, base, Init::kUniform});
  s.push_back({"enc.pos_embed", {c.max_len, c.hidden}, base, Init::kUniform});
  push_ln(s, "enc.embed_ln", c.hidden, base);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto p = layer_prefix("enc", l);
    push_attention(s, p + ".attn", c.hidden, base);
    push_ln(s, p + ".ln1", c.hidden, base);
    push_ff(s, p + ".ff", c.hidden, c.ff_dim, base);
    push_ln(s, p + ".ln2", c.hidden, base);
  }
  s.push_back({"enc.mlm_bias", {c.vocab}, base, Init::kZeros});

  s.push_back({"dec.tok_embed", {c.vocab, c.hidden}, dec, Init::kUniform});
  s.push_back({"dec.pos_embed", {c.max_len, c.hidden}, dec, Init::kUniform});
  push_ln(s, "dec.embed_ln", c.hidden, dec);
  for (std::size_t l = 0; l < c.n_decoder_layers; ++l) {
    const auto p = layer_prefix("dec", l);
    push_attention(s, p + ".self_attn", c.hidden, dec);
    push_ln(s, p + ".ln1", c.hidden, dec);
    push_attention(s, p + ".cross_attn", c.hidden, dec);
    push_ln(s, p + ".ln2", c.hidden, dec);
    push_ff(s, p + ".ff", c.hidden, c.ff_dim, dec);
    push_ln(s, p + ".ln3", c.hidden, dec);
  }
  s.push_back({"dec.out.weight", {c.hidden, c.vocab}, dec, Init::kUniform});
  s.push_back({"dec.out.bias", {c.vocab}, dec, Init::kZeros});
  return s;
}

std::vector<ParamSpec> adapter_specs(const ModelConfig& c, const std::string& tag) {
  if (tag.empty()) throw UsageError("adapter tag must be nonempty");
  std::vector<ParamSpec> s;
  const auto g = group::adapter(tag);
  const std::size_t d = c.bottleneck();
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto p = "adapter." + tag + ".layer" + std::to_string(l);
    s.push_back({p + ".down", {c.hidden, d}, g, Init::kUniform});
    s.push_back({p + ".down_bias", {d}, g, Init::kZeros});
    s.push_back({p + ".up", {d, c.hidden}, g, Init::kZeros});
    s.push_back({p + ".up_bias", {c.hidden}, g, Init::kZeros});
  }
  return s;
}

std::vector<ParamSpec> fusion_specs(const ModelConfig& c) {
  std::vector<ParamSpec> s;
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto p = "fusion.layer" + std::to_string(l);
    s.push_back({p + ".query", {c.hidden, c.hidden}, group::kFusion, Init::kUniform});
    s.push_back({p + ".key", {c.hidden, c.hidden}, group::kFusion, Init::kUniform});
    s.push_back({p + ".value", {c.hidden, c.hidden}, group::kFusion, Init::kIdentity});
  }
  return s;
}

std::vector<ParamSpec> lora_specs(const ModelConfig& c) {
  std::vector<ParamSpec> s;
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto p = "lora.layer" + std::to_string(l);
    for (const char* m : {"q", "v"}) {
      s.push_back({p + "." + m + ".a", {c.hidden, c.lora_rank}, group::kLora, Init::kUniform});
      s.push_back({p + "." + m + ".b", {c.lora_rank, c.hidden}, group::kLora, Init::kZeros});
    }
  }
  return s;
}

std::size_t count_specs(const std::vector<ParamSpec>& specs) {
  std::size_t n = 0;
  for (const auto& s : specs) n += numel(s.shape);
  return n;
}

// --- registry -----------------------------------------------------------------

template <typename T>
Tensor<T> ParamRegistry<T>::add(const ParamSpec& spec, Tensor<T> tensor) {
  if (contains(spec.name)) throw UsageError("duplicate parameter name " + spec.name);
  if (tensor.shape() != spec.shape)
    throw DimensionError("parameter " + spec.name + " expects " + shape_str(spec.shape) +
                         ", got " + shape_str(tensor.shape()));
  index_.emplace(spec.name, entries_.size());
  entries_.push_back({spec.name, spec.group, tensor});
  return tensor;
}

template <typename T>
const Tensor<T>& ParamRegistry<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("no parameter named " + name);
  return entries_[it->second].tensor;
}

template <typename T>
std::vector<std::string> ParamRegistry<T>::groups() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
  return out;
}

template <typename T>
void ParamRegistry<T>::set_all_trainable(bool on) {
  for (auto& e : entries_) e.tensor.set_requires_grad(on);
}

template <typename T>
ParamCounts ParamRegistry<T>::count(ParamFilter filter) const {
  ParamCounts c;
  for (const auto& e : entries_) {
    const std::size_t n = e.tensor.numel();
    const bool trainable = e.tensor.requires_grad();
    (trainable ? c.trainable : c.frozen) += n;
    c.all += n;
    const bool selected = filter == ParamFilter::kAll ||
                          (filter == ParamFilter::kTrainable && trainable) ||
                          (filter == ParamFilter::kFrozen && !trainable);
    if (selected) c.by_group[e.group] += n;
  }
  return c;
}

// --- model ----------------------------------------------------------------------

template <typename T>
TransformerModel<T>::TransformerModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  for (const auto& spec : backbone_specs(cfg_)) create_param(spec);

  auto P = [this](const std::string& n) { return params_.get(n); };
  auto attn = [&](const std::string& p) {
    return AttentionWeights{P(p + ".wq"), P(p + ".bq"), P(p + ".wk"), P(p + ".bk"),
                            P(p + ".wv"), P(p + ".bv"), P(p + ".wo"), P(p + ".bo")};
  };
  auto ln = [&](const std::string& p) { return LayerNormWeights{P(p + ".gain"), P(p + ".bias")}; };
  auto ff = [&](const std::string& p) {
    return FeedForward{P(p + ".w1"), P(p + ".b1"), P(p + ".w2"), P(p + ".b2")};
  };

  tok_embed_ = P("enc.tok_embed");
  pos_embed_ = P("enc.pos_embed");
  mlm_bias_ = P("enc.mlm_bias");
  embed_ln_ = ln("enc.embed_ln");
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const auto p = layer_prefix("enc", l);
    encoder_.push_back({attn(p + ".attn"), ln(p + ".ln1"), ff(p + ".ff"), ln(p + ".ln2")});
  }
  dec_tok_embed_ = P("dec.tok_embed");
  dec_pos_embed_ = P("dec.pos_embed");
  dec_embed_ln_ = ln("dec.embed_ln");
  for (std::size_t l = 0; l < cfg_.n_decoder_layers; ++l) {
    const auto p = layer_prefix("dec", l);
    decoder_.push_back({attn(p + ".self_attn"), ln(p + ".ln1"), attn(p + ".cross_attn"),
                        ln(p + ".ln2"), ff(p + ".ff"), ln(p + ".ln3")});
  }
  out_weight_ = P("dec.out.weight");
  out_bias_ = P("dec.out.bias");
}

template <typename T>
Tensor<T> TransformerModel<T>::create_param(const ParamSpec& spec) {
  const std::size_t n = numel(spec.shape);
  std::vector<T> v(n, T(0));
  switch (spec.init) {
    case Init::kUniform: {
      Rng rng(seed_, spec.name);
      for (auto& x : v) x = static_cast<T>(rng.uniform(-0.05, 0.05));
      break;
    }
    case Init::kZeros:
      break;
    case Init::kOnes:
      std::fill(v.begin(), v.end(), T(1));
      break;
    case Init::kIdentity:
      if (spec.shape.size() != 2 || spec.shape[0] != spec.shape[1])
        throw UsageError("identity init needs a square matrix: " + spec.name);
      for (std::size_t i = 0; i < spec.shape[0]; ++i) v[i * spec.shape[0] + i] = T(1);
      break;
  }
  return params_.add(spec, Tensor<T>::from(spec.shape, std::move(v), false));
}

template <typename T>
Tensor<T> TransformerModel<T>::norm(const LayerNormWeights& ln, const Tensor<T>& x) const {
  return layer_norm(x, ln.gain, ln.bias, static_cast<T>(cfg_.ln_eps));
}

template <typename T>
Tensor<T> TransformerModel<T>::feed_forward(const FeedForward& f, const Tensor<T>& x) const {
  return add_bias(matmul(relu(add_bias(matmul(x, f.w1), f.b1)), f.w2), f.b2);
}

template <typename T>
Tensor<T> TransformerModel<T>::attention(const AttentionWeights& w, const Tensor<T>& x,
                                         const Tensor<T>& memory, bool causal,
                                         const LoraLayer<T>* lora) const {
  Tensor<T> q = lora ? lora_forward(w.wq, lora->query, x) : matmul(x, w.wq);
  Tensor<T> v = lora ? lora_forward(w.wv, lora->value, memory) : matmul(memory, w.wv);
  q = add_bias(q, w.bq);
  v = add_bias(v, w.bv);
  const Tensor<T> k = add_bias(matmul(memory, w.wk), w.bk);
  const auto ctx = multi_head_attention(q, k, v, cfg_.n_heads, causal);
  return add_bias(matmul(ctx, w.wo), w.bo);
}

template <typename T>
Tensor<T> TransformerModel<T>::apply_slot(std::size_t l, const Tensor<T>& h,
                                          std::span<const TokenId> tokens,
                                          const EncodeOptions& opts,
                                          LayerActivations<T>* act) const {
  switch (slots_.mechanism) {
    case Mechanism::kNone:
    case Mechanism::kLora:
      return h;
    case Mechanism::kAdapter:
      return adapter_forward(slots_.adapter.layers.at(l), h, h);
    case Mechanism::kFusion:
      break;
  }
  const auto& stack = slots_.stack;
  const std::size_t N = stack.size();
  if (opts.excluded && *opts.excluded >= N)
    throw UsageError("excluded adapter index " + std::to_string(*opts.excluded) +
                     " outside a stack of " + std::to_string(N));
  std::vector<Tensor<T>> z(N);
  std::optional<std::size_t> excluded;
  for (std::size_t n = 0; n < N; ++n) {
    if (opts.excluded == n) {
      if (opts.exclusion_mode == ExclusionMode::kZeroWeights) {
        z[n] = h;  // an all-zero adapter returns its residual
        continue;
      }
      excluded = n;
      continue;
    }
    z[n] = adapter_forward(stack.adapters[n].layers.at(l), h, h);
  }
  auto fused = fusion_forward(slots_.fusion.at(l), h, z, excluded);
  if (opts.trace) {
    std::vector<double> s(fused.attention.begin(), fused.attention.end());
    opts.trace->record(s, l, tokens);
  }
  if (act) {
    act->z = z;
    act->attention = fused.attention;
  }
  return fused.output;
}

template <typename T>
EncoderOutput<T> TransformerModel<T>::encode(std::span<const TokenId> tokens,
                                             const EncodeOptions& opts) const {
  if (tokens.empty()) throw DataError("encode: empty token sequence");
  if (tokens.size() > cfg_.max_len && !opts.truncate)
    throw DataError("encode: input of " + std::to_string(tokens.size()) +
                    " tokens exceeds max_len " + std::to_string(cfg_.max_len));
  const auto ids = tokens.first(std::min(tokens.size(), cfg_.max_len));
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= cfg_.vocab)
      throw DataError("encode: token id " + std::to_string(ids[i]) + " at position " +
                      std::to_string(i) + " outside vocabulary of " + std::to_string(cfg_.vocab));

  std::vector<TokenId> pos(ids.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<TokenId>(i);

  EncoderOutput<T> out;
  Tensor<T> x = norm(embed_ln_, add(embedding(tok_embed_, ids), embedding(pos_embed_, pos)));
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    const auto& L = encoder_[l];
    const LoraLayer<T>* lora =
        slots_.mechanism == Mechanism::kLora ? &slots_.lora.at(l) : nullptr;
    const auto a = norm(L.ln1, add(x, attention(L.attn, x, x, false, lora)));
    const auto h = norm(L.ln2, add(a, feed_forward(L.ff, a)));
    LayerActivations<T> act;
    x = apply_slot(l, h, ids, opts, opts.keep_activations ? &act : nullptr);
    if (opts.keep_activations) {
      act.h = h;
      act.r = h;
      act.out = x;
      out.layers.push_back(std::move(act));
    }
  }
  out.states = x;
  return out;
}

template <typename T>
Tensor<T> TransformerModel<T>::mlm_logits(const Tensor<T>& states) const {
  return add_bias(matmul_nt(states, tok_embed_), mlm_bias_);
}

template <typename T>
Tensor<T> TransformerModel<T>::decoder_logits(const Tensor<T>& enc,
                                              std::span<const TokenId> dec_input) const {
  if (dec_input.empty()) throw DataError("decoder: empty input");
  if (dec_input.size() > cfg_.max_len)
    throw DataError("decoder: input of " + std::to_string(dec_input.size()) +
                    " tokens exceeds max_len " + std::to_string(cfg_.max_len));
  std::vector<TokenId> pos(dec_input.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<TokenId>(i);
  Tensor<T> y = norm(dec_embed_ln_,
                     add(embedding(dec_tok_embed_, dec_input), embedding(dec_pos_embed_, pos)));
  for (const auto& L : decoder_) {
    const auto a = norm(L.ln1, add(y, attention(L.self_attn, y, y, true, nullptr)));
    const auto c = norm(L.ln2, add(a, attention(L.cross_attn, a, enc, false, nullptr)));
    y = norm(L.ln3, add(c, feed_forward(L.ff, c)));
  }
  return add_bias(matmul(y, out_weight_), out_bias_);
}

template <typename T>
std::vector<TokenId> TransformerModel<T>::decode_generate(const Tensor<T>& enc,
                                                          std::size_t max_new) const {
  if (max_new == 0) throw UsageError("decode_generate: max_new must be at least 1");
  NoGradGuard guard;
  std::vector<TokenId> input{special::kBos};
  std::vector<TokenId> out;
  const std::size_t V = cfg_.vocab;
  while (out.size() < max_new && input.size() <= cfg_.max_len) {
    const auto logits = decoder_logits(enc, input);
    const auto row = logits.values().subspan((input.size() - 1) * V, V);
    const auto best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    out.push_back(best);
    if (best == special::kEos) break;
    input.push_back(best);
  }
  return out;
}

template class ParamRegistry<float>;
template class ParamRegistry<double>;
template class TransformerModel<float>;
template class TransformerModel<double>;

}  // namespace advf
