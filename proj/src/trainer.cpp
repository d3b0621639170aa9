// SPDX-License-Identifier: Apache-2.0
#include "advf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"

#include "advf/attention_trace.hpp"
#include "advf/error.hpp"
#include "advf/instrument.hpp"
#include "advf/rng.hpp"
#include "advf/special_tokens.hpp"
#include "advf/tokenizer.hpp"

namespace advf {

Task parse_task(const std::string& s) {
  if (s == "summarization") return Task::kSummarization;
  if (s == "mnp") return Task::kMnp;
  throw UsageError("unknown task '" + s + "' (expected summarization or mnp)");
}

FinetuneMechanism parse_mechanism(const std::string& s) {
  if (s == "full") return FinetuneMechanism::kFull;
  if (s == "task-adapter") return FinetuneMechanism::kTaskAdapter;
  if (s == "lora") return FinetuneMechanism::kLora;
  throw UsageError("unknown mechanism '" + s + "' (expected full, task-adapter or lora)");
}

ExclusionMode parse_exclusion_mode(const std::string& s) {
  if (s == "exclude") return ExclusionMode::kExclude;
  if (s == "zero-weights") return ExclusionMode::kZeroWeights;
  throw UsageError("unknown exclusion mode '" + s + "' (expected exclude or zero-weights)");
}

std::string to_string(Task t) { return t == Task::kMnp ? "mnp" : "summarization"; }

// --- partition ----------------------------------------------------------------------

template <typename T>
TrainablePartition TrainablePartition::from_groups(const ParamRegistry<T>& params,
                                                   const std::set<std::string>& groups) {
  TrainablePartition p;
  for (const auto& e : params.entries())
    (groups.count(e.group) ? p.trainable_ : p.frozen_).insert(e.name);
  return p;
}

template <typename T>
void TrainablePartition::apply(ParamRegistry<T>& params) const {
  for (const auto& e : params.entries()) {
    auto t = e.tensor;
    t.set_requires_grad(is_trainable(e.name));
  }
}

template <typename T>
std::map<std::string, std::uint64_t> TrainablePartition::frozen_checksums(
    const ParamRegistry<T>& params) const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& name : frozen_) out[name] = checksum<T>(params.get(name).values());
  return out;
}

// --- optimiser ------------------------------------------------------------------------

template <typename T>
void adam_step(OptimizerState<T>& opt, ParamRegistry<T>& params,
               const TrainablePartition& partition) {
  const auto& c = opt.cfg;
  ++opt.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));
  for (const auto& e : params.entries()) {
    if (!partition.is_trainable(e.name) || !e.tensor.has_grad()) continue;
    const auto g = e.tensor.grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!std::isfinite(static_cast<double>(g[i])))
        throw NumericError("non-finite gradient in parameter " + e.name + " at index " +
                           std::to_string(i));
    auto& m = opt.m[e.name];
    auto& v = opt.v[e.name];
    if (m.empty()) {
      m.assign(g.size(), 0.0);
      v.assign(g.size(), 0.0);
    }
    auto t = e.tensor;
    auto p = t.mutable_values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double mh = m[i] / bc1, vh = v[i] / bc2;
      double x = static_cast<double>(p[i]);
      x -= c.lr * (mh / (std::sqrt(vh) + c.eps) + c.weight_decay * x);
      p[i] = static_cast<T>(x);
    }
  }
}

// --- data ---------------------------------------------------------------------------

MlmBatch mlm_mask(std::span<const TokenId> tokens, double mask_rate, std::size_t vocab_size,
                  std::uint64_t seed) {
  if (!(mask_rate > 0.0 && mask_rate < 1.0))
    throw ConfigError("mask_rate must lie in (0, 1), got " + std::to_string(mask_rate));
  if (vocab_size <= static_cast<std::size_t>(special::kCount))
    throw ConfigError("mlm_mask: vocabulary has no ordinary tokens");
  MlmBatch b{{tokens.begin(), tokens.end()}, std::vector<TokenId>(tokens.size(), special::kIgnore)};
  const std::size_t n = tokens.size();
  if (n == 0) return b;
  auto k = static_cast<std::size_t>(std::ceil(mask_rate * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  Rng rng(seed, "mlm");
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = i;
  rng.shuffle(pos.begin(), pos.end());
  for (std::size_t j = 0; j < k; ++j) {
    const auto i = pos[j];
    b.target[i] = tokens[i];
    const double u = rng.uniform();
    if (u < 0.8)
      b.input[i] = special::kMask;
    else if (u < 0.9)
      b.input[i] = static_cast<TokenId>(special::kCount + rng.below(vocab_size - special::kCount));
  }
  return b;
}

std::vector<Seq2SeqExample> prepare_examples(const Corpus& corpus,
                                             std::span<const std::size_t> indices,
                                             const Vocabulary& vocab, Task task,
                                             std::size_t max_len) {
  if (max_len < 2) throw ConfigError("prepare_examples: max_len must be at least 2");
  std::vector<Seq2SeqExample> out;
  for (auto i : indices) {
    const auto& e = corpus.examples.at(i);
    Seq2SeqExample s;
    s.lang = e.lang;
    if (task == Task::kSummarization) {
      if (e.doc.empty()) throw DataError("example " + std::to_string(i) + " has an empty doc");
      s.input = vocab.encode(e.code);
      s.target = vocab.encode(e.doc);
    } else {
      if (!e.name || e.name->empty())
        throw DataError("example " + std::to_string(i) +
                        " has no method name; the mnp task needs a name field");
      auto m = mask_method_name(e, vocab);
      s.input = std::move(m.input);
      s.target = std::move(m.target);
    }
    if (s.input.size() > max_len) s.input.resize(max_len);
    if (s.target.size() > max_len - 1) s.target.resize(max_len - 1);
    s.reference = vocab.decode(s.target);
    out.push_back(std::move(s));
  }
  return out;
}

void write_log_record(std::ostream& out, const LogRecord& r) {
  nlohmann::json j{{"step", r.step}, {"phase", r.phase}, {"language", r.language},
                   {"loss", r.loss}};
  j["metric"] = r.metric ? nlohmann::json(*r.metric) : nlohmann::json(nullptr);
  out << j.dump() << '\n';
}

// --- losses -------------------------------------------------------------------------

template <typename T>
Tensor<T> seq2seq_loss(const TransformerModel<T>& model, const Seq2SeqExample& ex,
                       const EncodeOptions& opts) {
  auto o = opts;
  o.truncate = true;
  const auto enc = model.encode(ex.input, o);
  std::vector<TokenId> dec_in{special::kBos}, labels(ex.target);
  dec_in.insert(dec_in.end(), ex.target.begin(), ex.target.end());
  labels.push_back(special::kEos);
  const std::size_t L = model.config().max_len;
  if (dec_in.size() > L) {
    dec_in.resize(L);
    labels.resize(L);
  }
  return cross_entropy_logits(model.decoder_logits(enc.states, dec_in),
                              std::span<const TokenId>(labels), special::kIgnore);
}

template <typename T>
Tensor<T> mlm_loss(const TransformerModel<T>& model, const MlmBatch& batch,
                   const EncodeOptions& opts) {
  auto o = opts;
  o.truncate = true;
  const auto enc = model.encode(batch.input, o);
  std::span<const TokenId> tgt(batch.target);
  tgt = tgt.first(std::min(tgt.size(), model.config().max_len));
  return cross_entropy_logits(model.mlm_logits(enc.states), tgt, special::kIgnore);
}

// --- loop ---------------------------------------------------------------------------

namespace {

// Cycles through a shuffled index list, reshuffling at every wrap.
class Cycler {
 public:
  Cycler(std::size_t n, std::uint64_t seed, const std::string& stream)
      : order_(n), rng_(seed, stream) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    rng_.shuffle(order_.begin(), order_.end());
  }
  std::vector<std::size_t> take(std::size_t k) {
    std::vector<std::size_t> out;
    k = std::min(k, order_.size());
    while (out.size() < k) {
      if (at_ == order_.size()) {
        rng_.shuffle(order_.begin(), order_.end());
        at_ = 0;
      }
      out.push_back(order_[at_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t at_ = 0;
};

template <typename T>
struct Batch {
  std::string language;
  int phase = 0;
  std::string phase_name;
  EncodeOptions options;
  std::function<Tensor<T>(const EncodeOptions&)> loss;
};

template <typename T>
Tensor<T> mean_loss(const std::vector<std::function<Tensor<T>(const EncodeOptions&)>>& parts,
                    const EncodeOptions& o) {
  Tensor<T> total;
  for (const auto& f : parts) {
    const auto l = f(o);
    total = total.defined() ? add(total, l) : l;
  }
  return scale(total, static_cast<T>(1.0 / static_cast<double>(parts.size())));
}

template <typename T>
TrainResult run_loop(TransformerModel<T>& model, const TrainablePartition& partition,
                     const TrainConfig& cfg, const TrainHooks<T>& hooks, std::size_t steps,
                     const std::function<Batch<T>(std::size_t)>& next_batch) {
  partition.apply(model.params());
  OptimizerState<T> opt;
  opt.cfg = cfg.adam;
  TrainResult res;
  const bool fusion = model.slots().mechanism == Mechanism::kFusion;
  for (std::size_t step = 1; step <= steps; ++step) {
    auto batch = next_batch(step);
    std::optional<AttentionTrace> trace;
    auto opts = batch.options;
    if (hooks.trace_batches && fusion) {
      trace.emplace(model.config().n_layers, model.slots().stack.tags(), true);
      opts.trace = &*trace;
    }
    const auto loss = batch.loss(opts);
    backward(loss);
    if (hooks.after_backward) {
      StepContext<T> ctx;
      ctx.step = step;
      ctx.phase = batch.phase;
      ctx.language = batch.language;
      ctx.options = batch.options;
      ctx.trace = trace ? &*trace : nullptr;
      ctx.batch_loss = [&batch] {
        NoGradGuard g;
        return static_cast<double>(batch.loss(batch.options).item());
      };
      hooks.after_backward(ctx);
    }
    adam_step(opt, model.params(), partition);
    for (const auto& e : model.params().entries()) {
      auto t = e.tensor;
      t.clear_grad();
    }
    LogRecord rec{step, batch.phase_name, batch.language, static_cast<double>(loss.item()), {}};
    if (hooks.metric && cfg.eval_every && step % cfg.eval_every == 0) rec.metric = hooks.metric(step);
    if (!std::isfinite(rec.loss)) throw NumericError("loss became non-finite at step " + std::to_string(step));
    res.losses.push_back(rec.loss);
    if (hooks.on_record) hooks.on_record(rec);
    res.records.push_back(std::move(rec));
  }
  for (const auto& e : model.params().entries()) {
    auto t = e.tensor;
    t.set_requires_grad(false);
  }
  return res;
}

template <typename T>
std::function<Tensor<T>(const EncodeOptions&)> example_loss(const TransformerModel<T>& model,
                                                            const Seq2SeqExample& ex) {
  return [&model, &ex](const EncodeOptions& o) { return seq2seq_loss(model, ex, o); };
}

void check_batch_size(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(cfg.adam.lr >= 0.0)) throw ConfigError("learning rate must be nonnegative");
}

}  // namespace

template <typename T>
TrainResult train_language_adapter(TransformerModel<T>& model, const std::string& tag,
                                   std::span<const std::vector<TokenId>> sequences,
                                   const TrainConfig& cfg, const TrainHooks<T>& hooks) {
  check_batch_size(cfg);
  if (sequences.empty()) throw DataError("language adapter '" + tag + "': empty corpus");
  if (tag == "task") throw UsageError("'task' is reserved for the task adapter");
  attach_adapter(model, tag);
  const auto partition =
      TrainablePartition::from_groups(model.params(), {group::adapter(tag)});
  const std::size_t L = model.config().max_len, V = model.config().vocab;
  Cycler cyc(sequences.size(), cfg.seed, "mlm-batches:" + tag);
  TrainResult res;
  try {
    res = run_loop<T>(model, partition, cfg, hooks, cfg.max_steps, [&](std::size_t step) {
      Batch<T> b;
      b.language = tag;
      b.phase_name = "mlm";
      std::vector<std::function<Tensor<T>(const EncodeOptions&)>> parts;
      for (auto i : cyc.take(cfg.batch_size)) {
        const auto& s = sequences[i];
        const auto n = std::min(s.size(), L);
        if (n == 0) throw DataError("language adapter '" + tag + "': empty sequence");
        const std::uint64_t seed = splitmix64(cfg.seed ^ (step * 0x9e3779b97f4a7c15ull + i));
        auto masked = std::make_shared<MlmBatch>(
            mlm_mask(std::span<const TokenId>(s).first(n), cfg.mask_rate, V, seed));
        parts.push_back([&model, masked](const EncodeOptions& o) {
          return mlm_loss(model, *masked, o);
        });
      }
      b.loss = [parts](const EncodeOptions& o) { return mean_loss<T>(parts, o); };
      return b;
    });
  } catch (...) {
    detach(model);
    throw;
  }
  detach(model);
  return res;
}

template <typename T>
TrainResult finetune(TransformerModel<T>& model, FinetuneMechanism mechanism,
                     std::span<const Seq2SeqExample> data, const TrainConfig& cfg,
                     const TrainHooks<T>& hooks) {
  check_batch_size(cfg);
  if (data.empty()) throw DataError("finetune: no training examples");
  std::set<std::string> groups{group::kDecoder};
  const auto mech = model.slots().mechanism;
  switch (mechanism) {
    case FinetuneMechanism::kFull:
      if (mech != Mechanism::kNone) throw UsageError("full fine-tuning expects empty slots");
      for (const auto& g : model.params().groups()) groups.insert(g);
      break;
    case FinetuneMechanism::kTaskAdapter:
      if (mech == Mechanism::kNone)
        attach_adapter(model, "task");
      else if (mech != Mechanism::kAdapter || model.slots().adapter.tag != "task")
        throw UsageError("slots already hold another mechanism");
      groups.insert(group::adapter("task"));
      break;
    case FinetuneMechanism::kLora:
      if (mech == Mechanism::kNone)
        attach_lora(model);
      else if (mech != Mechanism::kLora)
        throw UsageError("slots already hold another mechanism");
      groups.insert(group::kLora);
      break;
  }
  const auto partition = TrainablePartition::from_groups(model.params(), groups);
  Cycler cyc(data.size(), cfg.seed, "finetune-batches");
  return run_loop<T>(model, partition, cfg, hooks, cfg.max_steps, [&](std::size_t) {
    Batch<T> b;
    b.phase_name = "finetune";
    std::vector<std::function<Tensor<T>(const EncodeOptions&)>> parts;
    for (auto i : cyc.take(cfg.batch_size)) {
      if (b.language.empty())
        b.language = data[i].lang;
      else if (b.language != data[i].lang)
        b.language = "mixed";
      parts.push_back(example_loss(model, data[i]));
    }
    b.loss = [parts](const EncodeOptions& o) { return mean_loss<T>(parts, o); };
    return b;
  });
}

namespace {

template <typename T>
TrainResult fusion_loop(TransformerModel<T>& model, const std::vector<std::string>& stack_tags,
                        std::span<const Seq2SeqExample> data, const PhaseSchedule& schedule,
                        FusionMode mode, const TrainConfig& cfg, const TrainHooks<T>& hooks) {
  check_batch_size(cfg);
  if (data.empty()) throw DataError("fusion training: no training examples");
  auto& slots = model.slots();
  if (slots.mechanism == Mechanism::kNone) {
    attach_fusion(model, stack_tags, mode);
  } else if (slots.mechanism != Mechanism::kFusion || slots.stack.tags() != stack_tags) {
    throw UsageError("slots already hold another mechanism");
  } else {
    slots.fusion_mode = mode;
  }
  const auto& stack = slots.stack;

  std::vector<std::string> langs;
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& l = data[i].lang;
    if (!by_lang.count(l)) langs.push_back(l);
    by_lang[l].push_back(i);
  }
  if (schedule.phase1_steps > 0)
    for (const auto& l : langs) stack.index_of(l);  // validated again per batch below
  std::map<std::string, Cycler> cyclers;
  for (const auto& l : langs)
    cyclers.emplace(l, Cycler(by_lang[l].size(), cfg.seed, "fusion-batches:" + l));

  const auto partition =
      TrainablePartition::from_groups(model.params(), {group::kFusion, group::kDecoder});
  const std::size_t total = schedule.phase1_steps + schedule.phase2_steps;
  return run_loop<T>(model, partition, cfg, hooks, total, [&](std::size_t step) {
    Batch<T> b;
    b.language = langs[(step - 1) % langs.size()];
    const bool phase1 = step <= schedule.phase1_steps;
    b.phase = mode == FusionMode::kAdvFusion ? (phase1 ? 1 : 2) : 0;
    b.phase_name = mode == FusionMode::kAdvFusion ? (phase1 ? "phase1" : "phase2") : "fusion";
    if (phase1) {
      std::size_t m = 0;
      try {
        m = stack.index_of(b.language);
      } catch (const UsageError&) {
        throw DataError("batch language '" + b.language + "' has no adapter in the stack");
      }
      b.options.excluded = m;
      b.options.exclusion_mode = schedule.exclusion_mode;
    }
    std::vector<std::function<Tensor<T>(const EncodeOptions&)>> parts;
    const auto& idx = by_lang[b.language];
    for (auto j : cyclers.at(b.language).take(cfg.batch_size))
      parts.push_back(example_loss(model, data[idx[j]]));
    b.loss = [parts](const EncodeOptions& o) { return mean_loss<T>(parts, o); };
    return b;
  });
}

}  // namespace

template <typename T>
TrainResult train_advfusion(TransformerModel<T>& model, const std::vector<std::string>& stack_tags,
                            std::span<const Seq2SeqExample> data, const PhaseSchedule& schedule,
                            const TrainConfig& cfg, const TrainHooks<T>& hooks) {
  if (stack_tags.size() < 2)
    throw ConfigError("AdvFusion needs at least two language adapters, got " +
                      std::to_string(stack_tags.size()));
  for (const auto& ex : data)
    if (std::find(stack_tags.begin(), stack_tags.end(), ex.lang) == stack_tags.end())
      throw DataError("batch language '" + ex.lang + "' has no adapter in the stack");
  return fusion_loop(model, stack_tags, data, schedule, FusionMode::kAdvFusion, cfg, hooks);
}

template <typename T>
TrainResult train_fusion(TransformerModel<T>& model, const std::vector<std::string>& stack_tags,
                         std::span<const Seq2SeqExample> data, const TrainConfig& cfg,
                         const TrainHooks<T>& hooks) {
  PhaseSchedule s;
  s.phase2_steps = cfg.max_steps;
  return fusion_loop(model, stack_tags, data, s, FusionMode::kFusion, cfg, hooks);
}

#define ADVF_INSTANTIATE_TRAINER(T)                                                              \
  template TrainablePartition TrainablePartition::from_groups(const ParamRegistry<T>&,           \
                                                              const std::set<std::string>&);     \
  template void TrainablePartition::apply(ParamRegistry<T>&) const;                              \
  template std::map<std::string, std::uint64_t> TrainablePartition::frozen_checksums(            \
      const ParamRegistry<T>&) const;                                                            \
  template void adam_step(OptimizerState<T>&, ParamRegistry<T>&, const TrainablePartition&);     \
  template Tensor<T> seq2seq_loss(const TransformerModel<T>&, const Seq2SeqExample&,             \
                                  const EncodeOptions&);                                         \
  template Tensor<T> mlm_loss(const TransformerModel<T>&, const MlmBatch&, const EncodeOptions&); \
  template TrainResult train_language_adapter(TransformerModel<T>&, const std::string&,          \
                                              std::span<const std::vector<TokenId>>,             \
                                              const TrainConfig&, const TrainHooks<T>&);         \
  template TrainResult finetune(TransformerModel<T>&, FinetuneMechanism,                         \
                                std::span<const Seq2SeqExample>, const TrainConfig&,             \
                                const TrainHooks<T>&);                                           \
  template TrainResult train_advfusion(TransformerModel<T>&, const std::vector<std::string>&,    \
                                       std::span<const Seq2SeqExample>, const PhaseSchedule&,    \
                                       const TrainConfig&, const TrainHooks<T>&);                \
  template TrainResult train_fusion(TransformerModel<T>&, const std::vector<std::string>&,       \
                                    std::span<const Seq2SeqExample>, const TrainConfig&,         \
                                    const TrainHooks<T>&);

ADVF_INSTANTIATE_TRAINER(float)
ADVF_INSTANTIATE_TRAINER(double)

#undef ADVF_INSTANTIATE_TRAINER

}  // namespace advf
