// SPDX-License-Identifier: Apache-2.0
//
// Miniature post-norm encoder-decoder transformer. The encoder weights play
// the role of the frozen code LM; each encoder layer carries one adapter slot
// that consumes the feed-forward sublayer output.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "advf/adapters.hpp"
#include "advf/tensor.hpp"

namespace advf {

class AttentionTrace;

struct ModelConfig {
  std::size_t n_layers = 4;
  std::size_t hidden = 64;
  std::size_t n_heads = 4;
  std::size_t ff_dim = 256;
  std::size_t vocab = 1024;
  std::size_t max_len = 128;
  std::size_t n_decoder_layers = 2;
  std::size_t adapter_dim = 0;  // 0 selects hidden / 8
  std::size_t lora_rank = 8;
  double lora_alpha = 16.0;
  double ln_eps = 1e-5;

  std::size_t bottleneck() const { return adapter_dim ? adapter_dim : hidden / 8; }
  /// Throws ConfigError.
  void validate() const;

  /// 12 x 768 encoder with a 6-layer decoder and a 50265-token vocabulary.
  static ModelConfig reference_shape();

  bool operator==(const ModelConfig&) const = default;
};

/// Group tags used for partitioning and partial checkpoint loads.
namespace group {
inline constexpr const char* kBase = "base";
inline constexpr const char* kDecoder = "decoder";
inline constexpr const char* kFusion = "fusion";
inline constexpr const char* kLora = "lora";
inline std::string adapter(const std::string& tag) { return "adapter:" + tag; }
}  // namespace group

enum class Init { kUniform, kZeros, kOnes, kIdentity };

struct ParamSpec {
  std::string name;
  Shape shape;
  std::string group;
  Init init = Init::kUniform;
};

/// Shapes of the backbone encoder (group base) and decoder (group decoder).
std::vector<ParamSpec> backbone_specs(const ModelConfig& cfg);
std::vector<ParamSpec> adapter_specs(const ModelConfig& cfg, const std::string& tag);
std::vector<ParamSpec> fusion_specs(const ModelConfig& cfg);
std::vector<ParamSpec> lora_specs(const ModelConfig& cfg);

struct ParamCounts {
  std::size_t trainable = 0;
  std::size_t frozen = 0;
  std::size_t all = 0;
  std::map<std::string, std::size_t> by_group;
};

enum class ParamFilter { kTrainable, kFrozen, kAll };

/// Closed-form count over shapes, no allocation.
std::size_t count_specs(const std::vector<ParamSpec>& specs);

template <typename T>
class ParamRegistry {
 public:
  struct Entry {
    std::string name;
    std::string group;
    Tensor<T> tensor;
  };

  /// Throws UsageError on a duplicate name.
  Tensor<T> add(const ParamSpec& spec, Tensor<T> tensor);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  /// Throws LookupError.
  const Tensor<T>& get(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> groups() const;

  /// Sets requires_grad on every tensor.
  void set_all_trainable(bool on);
  ParamCounts count(ParamFilter filter = ParamFilter::kAll) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class Mechanism { kNone, kAdapter, kLora, kFusion };

template <typename T>
struct LoraLayer {
  LoraDelta<T> query;
  LoraDelta<T> value;
};

/// What currently fills the encoder adapter slots.
template <typename T>
struct Instrumentation {
  Mechanism mechanism = Mechanism::kNone;
  Adapter<T> adapter;                 // kAdapter
  std::vector<LoraLayer<T>> lora;     // kLora
  AdapterStack<T> stack;              // kFusion
  std::vector<FusionBlock<T>> fusion; // kFusion, one per encoder layer
  FusionMode fusion_mode = FusionMode::kFusion;
};

struct EncodeOptions {
  bool truncate = false;
  /// Stack index of the adversarially excluded language adapter.
  std::optional<std::size_t> excluded;
  ExclusionMode exclusion_mode = ExclusionMode::kExclude;
  AttentionTrace* trace = nullptr;
  bool keep_activations = false;
};

template <typename T>
struct LayerActivations {
  Tensor<T> h;                   // feed-forward sublayer output (fusion query input)
  Tensor<T> r;                   // residual handed to adapters
  std::vector<Tensor<T>> z;      // candidate adapter outputs (undefined when excluded)
  Tensor<T> out;                 // what the slot emitted (O_l for fusion)
  std::vector<T> attention;      // S_l when fusion is attached
};

template <typename T>
struct EncoderOutput {
  Tensor<T> states;  // [tokens, hidden]
  std::vector<LayerActivations<T>> layers;
};

template <typename T>
class TransformerModel {
 public:
  TransformerModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  ParamRegistry<T>& params() { return params_; }
  const ParamRegistry<T>& params() const { return params_; }

  Instrumentation<T>& slots() { return slots_; }
  const Instrumentation<T>& slots() const { return slots_; }

  /// Registers a tensor initialised from the model seed and the name.
  Tensor<T> create_param(const ParamSpec& spec);

  /// Throws DataError for ids >= vocab or an overlong input without
  /// `opts.truncate`.
  EncoderOutput<T> encode(std::span<const TokenId> tokens, const EncodeOptions& opts = {}) const;

  /// Masked-LM logits through the (frozen) token embedding, [tokens, vocab].
  Tensor<T> mlm_logits(const Tensor<T>& states) const;

  /// Teacher-forced decoder logits, [dec_input.size(), vocab].
  Tensor<T> decoder_logits(const Tensor<T>& encoder_states,
                           std::span<const TokenId> dec_input) const;

  /// Greedy generation from BOS. The returned ids include the EOS token when
  /// one was produced.
  std::vector<TokenId> decode_generate(const Tensor<T>& encoder_states,
                                       std::size_t max_new) const;

  ParamCounts count_parameters(ParamFilter filter = ParamFilter::kAll) const {
    return params_.count(filter);
  }

 private:
  struct AttentionWeights {
    Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct LayerNormWeights {
    Tensor<T> gain, bias;
  };
  struct FeedForward {
    Tensor<T> w1, b1, w2, b2;
  };
  struct EncoderLayer {
    AttentionWeights attn;
    LayerNormWeights ln1;
    FeedForward ff;
    LayerNormWeights ln2;
  };
  struct DecoderLayer {
    AttentionWeights self_attn;
    LayerNormWeights ln1;
    AttentionWeights cross_attn;
    LayerNormWeights ln2;
    FeedForward ff;
    LayerNormWeights ln3;
  };

  Tensor<T> attention(const AttentionWeights& w, const Tensor<T>& x, const Tensor<T>& memory,
                      bool causal, const LoraLayer<T>* lora) const;
  Tensor<T> feed_forward(const FeedForward& f, const Tensor<T>& x) const;
  Tensor<T> norm(const LayerNormWeights& ln, const Tensor<T>& x) const;
  Tensor<T> apply_slot(std::size_t layer, const Tensor<T>& h, std::span<const TokenId> tokens,
                       const EncodeOptions& opts, LayerActivations<T>* act) const;

  ModelConfig cfg_;
  std::uint64_t seed_;
  ParamRegistry<T> params_;
  Instrumentation<T> slots_;

  Tensor<T> tok_embed_, pos_embed_, mlm_bias_;
  LayerNormWeights embed_ln_;
  std::vector<EncoderLayer> encoder_;
  Tensor<T> dec_tok_embed_, dec_pos_embed_, out_weight_, out_bias_;
  LayerNormWeights dec_embed_ln_;
  std::vector<DecoderLayer> decoder_;
};

}  // namespace advf
