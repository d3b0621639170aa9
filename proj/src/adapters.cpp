// SPDX-License-Identifier: Apache-2.0
#include "advf/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advf/error.hpp"
#include "advf/instrument.hpp"

namespace advf {

template <typename T>
std::size_t AdapterStack<T>::index_of(const std::string& tag) const {
  for (std::size_t i = 0; i < adapters.size(); ++i)
    if (adapters[i].tag == tag) return i;
  throw UsageError("adapter '" + tag + "' is not in the stack");
}

template <typename T>
std::vector<std::string> AdapterStack<T>::tags() const {
  std::vector<std::string> out;
  for (const auto& a : adapters) out.push_back(a.tag);
  return out;
}

template <typename T>
void AdapterStack<T>::validate() const {
  auto t = tags();
  std::sort(t.begin(), t.end());
  if (std::adjacent_find(t.begin(), t.end()) != t.end())
    throw UsageError("adapter stack holds duplicate tags");
}

template <typename T>
Tensor<T> adapter_forward(const BottleneckAdapter<T>& a, const Tensor<T>& h,
                          const Tensor<T>& residual) {
  if (h.shape() != residual.shape())
    throw DimensionError("adapter_forward: h " + shape_str(h.shape()) + " vs residual " +
                         shape_str(residual.shape()));
  const auto down = relu(add_bias(matmul(h, a.down), a.down_bias));
  return add(add_bias(matmul(down, a.up), a.up_bias), residual);
}

template <typename T>
Tensor<T> lora_forward(const Tensor<T>& base_weight, const LoraDelta<T>& delta,
                       const Tensor<T>& x) {
  if (base_weight.rank() != 2 || delta.rank == 0 || delta.rank >= base_weight.dim(0))
    throw ConfigError("lora rank " + std::to_string(delta.rank) + " must be in [1, " +
                      (base_weight.rank() == 2 ? std::to_string(base_weight.dim(0)) : "?") + ")");
  const auto base = matmul(x, base_weight);
  const auto low = matmul(matmul(x, delta.a), delta.b);
  return add(base, scale(low, delta.scaling));
}

template <typename T>
FusionOutput<T> fusion_forward(const FusionBlock<T>& block, const Tensor<T>& h,
                               const std::vector<Tensor<T>>& candidates,
                               std::optional<std::size_t> excluded) {
  const std::size_t N = candidates.size();
  if (N == 0) throw UsageError("fusion_forward: no candidates");
  if (excluded) {
    if (*excluded >= N)
      throw UsageError("fusion_forward: excluded candidate " + std::to_string(*excluded) +
                       " not in a stack of " + std::to_string(N));
    if (N == 1) throw UsageError("fusion_forward: cannot exclude the only candidate");
  }
  std::vector<std::size_t> included;
  for (std::size_t n = 0; n < N; ++n)
    if (excluded != n) included.push_back(n);

  const auto q = matmul(h, block.query);
  std::vector<Tensor<T>> keys, values;
  for (std::size_t n : included) {
    const auto& z = candidates[n];
    if (!z.defined() || z.shape() != h.shape())
      throw DimensionError("fusion_forward: candidate " + std::to_string(n) + " has shape " +
                           (z.defined() ? shape_str(z.shape()) : std::string("<undefined>")) +
                           ", expected " + shape_str(h.shape()));
    keys.push_back(matmul(z, block.key));
    values.push_back(matmul(z, block.value));
  }
  const auto weights = softmax_lastdim(row_dots(q, keys));

  FusionOutput<T> out;
  out.output = mix_rows(weights, values);
  out.tokens = h.dim(0);
  out.candidates = N;
  out.attention.assign(out.tokens * N, T(0));
  const auto w = weights.values();
  for (std::size_t t = 0; t < out.tokens; ++t)
    for (std::size_t i = 0; i < included.size(); ++i)
      out.attention[t * N + included[i]] = w[t * included.size() + i];
  return out;
}

// --- instrumentation ------------------------------------------------------------

namespace {

template <typename T>
void require_empty(const TransformerModel<T>& model) {
  if (model.slots().mechanism != Mechanism::kNone)
    throw UsageError("adapter slots are already filled; detach first");
}

template <typename T>
Tensor<T> bind(TransformerModel<T>& model, const ParamSpec& spec) {
  if (model.params().contains(spec.name)) {
    const auto& t = model.params().get(spec.name);
    if (t.shape() != spec.shape)
      throw DimensionError("parameter " + spec.name + " has shape " + shape_str(t.shape()) +
                           ", expected " + shape_str(spec.shape));
    return t;
  }
  return model.create_param(spec);
}

}  // namespace

template <typename T>
Adapter<T> ensure_adapter(TransformerModel<T>& model, const std::string& tag) {
  const auto specs = adapter_specs(model.config(), tag);
  Adapter<T> a;
  a.tag = tag;
  a.kind = tag == "task" ? AdapterKind::kTask : AdapterKind::kLanguage;
  for (std::size_t i = 0; i < specs.size(); i += 4)
    a.layers.push_back({bind(model, specs[i]), bind(model, specs[i + 1]),
                        bind(model, specs[i + 2]), bind(model, specs[i + 3])});
  return a;
}

template <typename T>
std::vector<std::string> registered_adapters(const TransformerModel<T>& model,
                                             bool languages_only) {
  std::vector<std::string> tags;
  const std::string prefix = "adapter:";
  for (const auto& g : model.params().groups()) {
    if (g.rfind(prefix, 0) != 0) continue;
    auto tag = g.substr(prefix.size());
    if (languages_only && tag == "task") continue;
    tags.push_back(std::move(tag));
  }
  return tags;
}

template <typename T>
void attach_adapter(TransformerModel<T>& model, const std::string& tag) {
  require_empty(model);
  auto& s = model.slots();
  s.adapter = ensure_adapter(model, tag);
  s.mechanism = Mechanism::kAdapter;
}

template <typename T>
void attach_lora(TransformerModel<T>& model) {
  require_empty(model);
  const auto& cfg = model.config();
  const auto specs = lora_specs(cfg);
  const T scaling = static_cast<T>(cfg.lora_alpha / static_cast<double>(cfg.lora_rank));
  std::vector<LoraLayer<T>> layers;
  for (std::size_t i = 0; i < specs.size(); i += 4) {
    LoraLayer<T> l;
    l.query = {bind(model, specs[i]), bind(model, specs[i + 1]), cfg.lora_rank, scaling};
    l.value = {bind(model, specs[i + 2]), bind(model, specs[i + 3]), cfg.lora_rank, scaling};
    layers.push_back(std::move(l));
  }
  auto& s = model.slots();
  s.lora = std::move(layers);
  s.mechanism = Mechanism::kLora;
}

template <typename T>
void attach_fusion(TransformerModel<T>& model, const std::vector<std::string>& stack_tags,
                   FusionMode mode) {
  require_empty(model);
  if (stack_tags.empty()) throw UsageError("fusion needs at least one language adapter");
  AdapterStack<T> stack;
  for (const auto& tag : stack_tags) {
    if (!model.params().contains("adapter." + tag + ".layer0.down"))
      throw LookupError("language adapter '" + tag + "' is not registered");
    stack.adapters.push_back(ensure_adapter(model, tag));
  }
  stack.validate();
  const auto specs = fusion_specs(model.config());
  std::vector<FusionBlock<T>> blocks;
  for (std::size_t i = 0; i < specs.size(); i += 3)
    blocks.push_back({bind(model, specs[i]), bind(model, specs[i + 1]), bind(model, specs[i + 2])});
  auto& s = model.slots();
  s.stack = std::move(stack);
  s.fusion = std::move(blocks);
  s.fusion_mode = mode;
  s.mechanism = Mechanism::kFusion;
}

template <typename T>
void detach(TransformerModel<T>& model) {
  model.slots() = Instrumentation<T>{};
}

#define ADVF_INSTANTIATE_ADAPTERS(T)                                                          \
  template struct AdapterStack<T>;                                                            \
  template Tensor<T> adapter_forward(const BottleneckAdapter<T>&, const Tensor<T>&,           \
                                     const Tensor<T>&);                                       \
  template Tensor<T> lora_forward(const Tensor<T>&, const LoraDelta<T>&, const Tensor<T>&);   \
  template FusionOutput<T> fusion_forward(const FusionBlock<T>&, const Tensor<T>&,            \
                                          const std::vector<Tensor<T>>&,                      \
                                          std::optional<std::size_t>);                        \
  template Adapter<T> ensure_adapter(TransformerModel<T>&, const std::string&);               \
  template std::vector<std::string> registered_adapters(const TransformerModel<T>&, bool);    \
  template void attach_adapter(TransformerModel<T>&, const std::string&);                     \
  template void attach_lora(TransformerModel<T>&);                                            \
  template void attach_fusion(TransformerModel<T>&, const std::vector<std::string>&,          \
                              FusionMode);                                                    \
  template void detach(TransformerModel<T>&);

ADVF_INSTANTIATE_ADAPTERS(float)
ADVF_INSTANTIATE_ADAPTERS(double)

#undef ADVF_INSTANTIATE_ADAPTERS

}  // namespace advf
