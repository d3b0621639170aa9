// SPDX-License-Identifier: Apache-2.0
//
// Bottleneck adapters, LoRA deltas and the fusion attention that mixes the
// outputs of several language adapters.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "advf/tensor.hpp"

namespace advf {

enum class AdapterKind { kTask, kLanguage };

/// One layer of an adapter: U(ReLU(h D + b_D)) + b_U + r.
template <typename T>
struct BottleneckAdapter {
  Tensor<T> down;       // [h, d]
  Tensor<T> down_bias;  // [d]
  Tensor<T> up;         // [d, h]
  Tensor<T> up_bias;    // [h]
};

/// An adapter across every encoder layer, identified by its tag ("task" or a
/// language id).
template <typename T>
struct Adapter {
  std::string tag;
  AdapterKind kind = AdapterKind::kTask;
  std::vector<BottleneckAdapter<T>> layers;
};

template <typename T>
struct AdapterStack {
  std::vector<Adapter<T>> adapters;

  std::size_t size() const { return adapters.size(); }
  /// Index of the adapter with `tag`; throws UsageError when absent.
  std::size_t index_of(const std::string& tag) const;
  std::vector<std::string> tags() const;
  /// Throws UsageError on duplicate tags.
  void validate() const;
};

template <typename T>
struct LoraDelta {
  Tensor<T> a;  // [h, r]
  Tensor<T> b;  // [r, h], zero at init
  std::size_t rank = 0;
  T scaling = T(0);
};

template <typename T>
struct FusionBlock {
  Tensor<T> query;  // [h, h]
  Tensor<T> key;    // [h, h]
  Tensor<T> value;  // [h, h], identity at init
};

enum class FusionMode { kFusion, kAdvFusion };

/// What an adversarially excluded candidate turns into.
enum class ExclusionMode {
  kExclude,      // dropped from the softmax
  kZeroWeights,  // adapter weights treated as zero, candidate becomes r_l
};

template <typename T>
Tensor<T> adapter_forward(const BottleneckAdapter<T>& adapter, const Tensor<T>& h,
                          const Tensor<T>& residual);

/// x (W + scaling * a b), evaluated as x W + scaling (x a) b.
template <typename T>
Tensor<T> lora_forward(const Tensor<T>& base_weight, const LoraDelta<T>& delta,
                       const Tensor<T>& x);

template <typename T>
struct FusionOutput {
  Tensor<T> output;            // O_l, [tokens, h]
  std::vector<T> attention;    // S_l, [tokens, N] row-major, excluded column 0
  std::size_t tokens = 0;
  std::size_t candidates = 0;
};

/// Per token t: s = softmax_n((h[t] Q) . (z_n[t] K)) over included n and
/// O[t] = sum_n s_n z_n[t] V. `candidates[excluded]` is never read and may be
/// an undefined tensor.
template <typename T>
FusionOutput<T> fusion_forward(const FusionBlock<T>& block, const Tensor<T>& h,
                               const std::vector<Tensor<T>>& candidates,
                               std::optional<std::size_t> excluded = std::nullopt);

}  // namespace advf
