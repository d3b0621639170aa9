// SPDX-License-Identifier: Apache-2.0
//
// Optimisation loops: masked-LM pretraining of language adapters, downstream
// fine-tuning, AdapterFusion and the two-phase AdvFusion schedule.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "advf/corpus.hpp"
#include "advf/model.hpp"

namespace advf {

class AttentionTrace;
class Vocabulary;

enum class Task { kSummarization, kMnp };
enum class FinetuneMechanism { kFull, kTaskAdapter, kLora };

Task parse_task(const std::string& s);
FinetuneMechanism parse_mechanism(const std::string& s);
ExclusionMode parse_exclusion_mode(const std::string& s);
std::string to_string(Task t);

// --- trainable partition -----------------------------------------------------------

class TrainablePartition {
 public:
  /// Every parameter whose group is in `trainable_groups` trains; the rest is
  /// frozen.
  template <typename T>
  static TrainablePartition from_groups(const ParamRegistry<T>& params,
                                        const std::set<std::string>& trainable_groups);

  const std::set<std::string>& trainable() const { return trainable_; }
  const std::set<std::string>& frozen() const { return frozen_; }
  bool is_trainable(const std::string& name) const { return trainable_.count(name) != 0; }

  /// Sets requires_grad to match the partition.
  template <typename T>
  void apply(ParamRegistry<T>& params) const;

  /// FNV-1a per frozen parameter, for freeze-contract checks.
  template <typename T>
  std::map<std::string, std::uint64_t> frozen_checksums(const ParamRegistry<T>& params) const;

 private:
  std::set<std::string> trainable_, frozen_;
};

// --- optimiser ------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

template <typename T>
struct OptimizerState {
  AdamConfig cfg;
  std::size_t step = 0;
  std::unordered_map<std::string, std::vector<double>> m, v;
};

/// One bias-corrected Adam update over the trainable parameters that hold a
/// gradient. Frozen parameters are never touched. Throws NumericError naming
/// the parameter when a gradient is not finite.
template <typename T>
void adam_step(OptimizerState<T>& opt, ParamRegistry<T>& params,
               const TrainablePartition& partition);

// --- data ---------------------------------------------------------------------------

struct MlmBatch {
  std::vector<TokenId> input;
  std::vector<TokenId> target;  // ignore id outside selected positions
};

/// Selects ceil(rate * len) positions; 80% become the mask token, 10% a
/// random non-special token, 10% stay. Throws ConfigError unless 0 < rate < 1.
MlmBatch mlm_mask(std::span<const TokenId> tokens, double mask_rate, std::size_t vocab_size,
                  std::uint64_t seed);

struct Seq2SeqExample {
  std::string lang;
  std::vector<TokenId> input;
  std::vector<TokenId> target;  // without BOS/EOS
  std::string reference;        // doc text or space-joined name subtokens
};

/// Encodes corpus examples for `task`, truncating inputs to max_len and
/// targets to max_len - 1. MNP examples without a name are a DataError.
std::vector<Seq2SeqExample> prepare_examples(const Corpus& corpus,
                                             std::span<const std::size_t> indices,
                                             const Vocabulary& vocab, Task task,
                                             std::size_t max_len);

// --- training -----------------------------------------------------------------------

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t batch_size = 8;
  std::size_t max_steps = 100;
  AdamConfig adam{};
  double mask_rate = 0.15;
  std::size_t eval_every = 0;  // 0 disables periodic metrics
};

struct LogRecord {
  std::size_t step = 0;  // 1-based
  std::string phase;
  std::string language;
  double loss = 0.0;
  std::optional<double> metric;
};

void write_log_record(std::ostream& out, const LogRecord& r);

template <typename T>
struct StepContext {
  std::size_t step = 0;  // 1-based
  int phase = 0;         // 1 or 2 for AdvFusion, 0 otherwise
  std::string language;
  EncodeOptions options;                      // as used for this batch
  const AttentionTrace* trace = nullptr;      // fusion weights of this batch
  std::function<double()> batch_loss;         // recomputes the loss without grad
};

template <typename T>
struct TrainHooks {
  std::function<void(const LogRecord&)> on_record;
  /// Returns the periodic metric (e.g. validation BLEU) every eval_every steps.
  std::function<double(std::size_t step)> metric;
  /// Called after gradients are populated and before the optimiser step.
  std::function<void(const StepContext<T>&)> after_backward;
  bool trace_batches = false;
};

struct TrainResult {
  std::vector<double> losses;
  std::vector<LogRecord> records;
};

/// Masked-LM training of the language adapter `tag` (created when absent).
/// Only that adapter's parameters train; slots are empty again afterwards.
template <typename T>
TrainResult train_language_adapter(TransformerModel<T>& model, const std::string& tag,
                                   std::span<const std::vector<TokenId>> sequences,
                                   const TrainConfig& cfg, const TrainHooks<T>& hooks = {});

/// Seq2seq fine-tuning. kFull trains everything; kTaskAdapter and kLora train
/// the inserted parameters plus the decoder. The mechanism stays attached.
template <typename T>
TrainResult finetune(TransformerModel<T>& model, FinetuneMechanism mechanism,
                     std::span<const Seq2SeqExample> data, const TrainConfig& cfg,
                     const TrainHooks<T>& hooks = {});

struct PhaseSchedule {
  std::size_t phase1_steps = 0;
  std::size_t phase2_steps = 0;
  ExclusionMode exclusion_mode = ExclusionMode::kExclude;
};

/// Fusion over `stack_tags` with batches drawn round-robin per language.
/// Phase 1 excludes the batch language's adapter, phase 2 restores it. Only
/// the fusion blocks and the decoder train. Throws ConfigError for fewer
/// than two adapters and DataError for a batch language outside the stack.
template <typename T>
TrainResult train_advfusion(TransformerModel<T>& model, const std::vector<std::string>& stack_tags,
                            std::span<const Seq2SeqExample> data, const PhaseSchedule& schedule,
                            const TrainConfig& cfg, const TrainHooks<T>& hooks = {});

/// AdapterFusion: the same loop with no exclusion phase. A single adapter is
/// allowed (the fusion degenerates to a passthrough).
template <typename T>
TrainResult train_fusion(TransformerModel<T>& model, const std::vector<std::string>& stack_tags,
                         std::span<const Seq2SeqExample> data, const TrainConfig& cfg,
                         const TrainHooks<T>& hooks = {});

/// Teacher-forced seq2seq loss of one example (mean over target tokens + EOS).
template <typename T>
Tensor<T> seq2seq_loss(const TransformerModel<T>& model, const Seq2SeqExample& ex,
                       const EncodeOptions& opts = {});

/// Masked-LM loss of one masked sequence.
template <typename T>
Tensor<T> mlm_loss(const TransformerModel<T>& model, const MlmBatch& batch,
                   const EncodeOptions& opts = {});

}  // namespace advf
