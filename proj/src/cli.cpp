// SPDX-License-Identifier: Apache-2.0
#include "advf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "advf/attention_trace.hpp"
#include "advf/checkpoint.hpp"
#include "advf/corpus.hpp"
#include "advf/error.hpp"
#include "advf/evaluation.hpp"
#include "advf/instrument.hpp"
#include "advf/tokenizer.hpp"

namespace advf {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
  if (pos != v.size())
    throw ConfigError("config key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size())
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  return d;
}

std::vector<std::string> split_list(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const auto& item : in) {
    std::stringstream ss(item);
    for (std::string part; std::getline(ss, part, ',');)
      if (!trim(part).empty()) out.push_back(trim(part));
  }
  return out;
}

// Values shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string corpus;
  std::string checkpoint_in;
  std::string checkpoint_out;
  std::string log;
  std::string vocab;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--config", c.config, "key=value config file");
  sub->add_option("--corpus", c.corpus, "JSONL corpus");
  sub->add_option("--checkpoint-in", c.checkpoint_in, "Checkpoint to start from");
  sub->add_option("--checkpoint-out", c.checkpoint_out, "Checkpoint to write");
  sub->add_option("--log", c.log, "JSONL training log");
  sub->add_option("--vocab", c.vocab, "Vocabulary file");
}

struct Context {
  Common common;
  RunConfig cfg;
  std::ostream* out = nullptr;

  void load_config() {
    cfg.train.seed = common.seed;
    if (!common.config.empty()) apply_config_file(cfg, common.config);
    cfg.train.seed = common.seed;
  }

  Corpus corpus() const {
    if (common.corpus.empty()) throw UsageError("--corpus is required");
    return split(load_jsonl(common.corpus), cfg.split_ratios,
                 cfg.split_seed.value_or(common.seed));
  }

  struct Loaded {
    std::unique_ptr<TransformerModel<float>> model;
    Vocabulary vocab;
  };

  // Model from --checkpoint-in, or a fresh one sized by --vocab and the config.
  Loaded model() const {
    Loaded l;
    std::optional<Vocabulary> vocab;
    if (!common.vocab.empty()) vocab = Vocabulary::load_file(common.vocab);
    if (!common.checkpoint_in.empty()) {
      auto ck = load_checkpoint<float>(common.checkpoint_in);
      l.model = std::make_unique<TransformerModel<float>>(std::move(ck.model));
      if (!vocab) vocab = std::move(ck.vocab);
      if (!vocab) throw UsageError("checkpoint has no vocabulary; pass --vocab");
      if (vocab->size() > l.model->config().vocab)
        throw ConfigError("vocabulary has " + std::to_string(vocab->size()) +
                          " tokens, model holds " + std::to_string(l.model->config().vocab));
    } else {
      if (!vocab) throw UsageError("--vocab or --checkpoint-in is required");
      auto mc = cfg.model;
      mc.vocab = vocab->size();
      l.model = std::make_unique<TransformerModel<float>>(mc, common.seed);
    }
    l.vocab = std::move(*vocab);
    return l;
  }

  void save(const TransformerModel<float>& m, const Vocabulary& v, const std::string& command) {
    if (common.checkpoint_out.empty()) return;
    save_checkpoint(m, common.checkpoint_out, &v,
                    json{{"command", command}, {"seed", common.seed}}.dump());
    *out << "wrote " << common.checkpoint_out << '\n';
  }

  // Writes records to --log as they arrive.
  TrainHooks<float> hooks(std::ofstream& log) const {
    TrainHooks<float> h;
    if (!common.log.empty()) {
      log.open(common.log, std::ios::app);
      if (!log) throw DataError("cannot write log " + common.log);
      h.on_record = [&log](const LogRecord& r) { write_log_record(log, r); };
    }
    return h;
  }

  void summary(const std::string& what, const TrainResult& r) const {
    *out << what << ": " << r.losses.size() << " steps";
    if (!r.losses.empty()) *out << ", final loss " << r.losses.back();
    *out << '\n';
  }
};

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw UsageError("unknown split '" + s + "' (expected train, valid or test)");
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

std::vector<std::string> stack_tags(const TransformerModel<float>& m,
                                    const std::vector<std::string>& requested) {
  const auto& slots = m.slots();
  if (!requested.empty()) return requested;
  if (slots.mechanism == Mechanism::kFusion) return slots.stack.tags();
  auto tags = registered_adapters(m);
  if (tags.empty()) throw UsageError("model holds no language adapters; run pretrain-lang-adapter");
  return tags;
}

// Trainable groups of each mechanism for param-report.
std::set<std::string> trainable_groups(const std::string& mech, const std::string& lang,
                                       const std::vector<std::string>& all_groups) {
  if (mech == "none") return {};
  if (mech == "full") return {all_groups.begin(), all_groups.end()};
  if (mech == "task-adapter") return {group::adapter("task"), group::kDecoder};
  if (mech == "lora") return {group::kLora, group::kDecoder};
  if (mech == "fusion" || mech == "advfusion") return {group::kFusion, group::kDecoder};
  if (mech == "language-adapter") {
    if (lang.empty()) throw UsageError("--lang is required for language-adapter");
    return {group::adapter(lang)};
  }
  throw UsageError("unknown mechanism '" + mech +
                   "' (expected none, full, task-adapter, lora, fusion, advfusion or "
                   "language-adapter)");
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  auto& m = c.model;
  auto& t = c.train;
  if (key == "n_layers") m.n_layers = to_size(key, v);
  else if (key == "hidden") m.hidden = to_size(key, v);
  else if (key == "n_heads") m.n_heads = to_size(key, v);
  else if (key == "ff_dim") m.ff_dim = to_size(key, v);
  else if (key == "max_len") m.max_len = to_size(key, v);
  else if (key == "n_decoder_layers") m.n_decoder_layers = to_size(key, v);
  else if (key == "adapter_dim") m.adapter_dim = to_size(key, v);
  else if (key == "lora_rank") m.lora_rank = to_size(key, v);
  else if (key == "lora_alpha") m.lora_alpha = to_double(key, v);
  else if (key == "lr") t.adam.lr = to_double(key, v);
  else if (key == "beta1") t.adam.beta1 = to_double(key, v);
  else if (key == "beta2") t.adam.beta2 = to_double(key, v);
  else if (key == "adam_eps") t.adam.eps = to_double(key, v);
  else if (key == "weight_decay") t.adam.weight_decay = to_double(key, v);
  else if (key == "batch_size") t.batch_size = to_size(key, v);
  else if (key == "steps") t.max_steps = to_size(key, v);
  else if (key == "mask_rate") t.mask_rate = to_double(key, v);
  else if (key == "vocab_size") c.vocab_size = to_size(key, v);
  else if (key == "max_new") c.max_new = to_size(key, v);
  else if (key == "split_seed") c.split_seed = to_size(key, v);
  else if (key == "split") {
    std::vector<double> r;
    for (const auto& p : split_list({v})) r.push_back(to_double(key, p));
    c.split_ratios = r;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::size_t n = 0;
  for (std::string line; std::getline(f, line);) {
    ++n;
    const auto s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + " line " + std::to_string(n) + ": expected key=value");
    try {
      apply_setting(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + " line " + std::to_string(n) + ": " + e.what());
    }
  }
}

int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"AdvFusion: multilingual adapter fusion for code models", "advfusion"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);
  Context ctx;
  ctx.out = &out;

  // gen-synthetic
  std::size_t n_langs = 3;
  std::vector<std::size_t> counts;
  std::string out_path;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic multilingual corpus");
  gen->add_option("--langs", n_langs, "Number of languages")->check(CLI::Range(2, 64));
  gen->add_option("--counts", counts, "Examples per language")->delimiter(',');
  gen->add_option("--out", out_path, "Output JSONL")->required();

  // tokenizer-train
  std::optional<std::size_t> vocab_size;
  auto* tok = app.add_subcommand("tokenizer-train", "Train the byte-level BPE vocabulary");
  tok->add_option("--vocab-size", vocab_size, "Target vocabulary size");
  tok->add_option("--out", out_path, "Vocabulary file")->required();

  // pretrain-lang-adapter
  std::vector<std::string> langs;
  std::optional<std::size_t> steps;
  auto* pre = app.add_subcommand("pretrain-lang-adapter", "MLM training of language adapters");
  pre->add_option("--lang", langs, "Language (repeatable, default every corpus language)")
      ->delimiter(',');
  pre->add_option("--steps", steps, "Steps per language");

  // finetune
  std::string mechanism = "task-adapter", task = "summarization";
  auto* fin = app.add_subcommand("finetune", "Seq2seq fine-tuning");
  fin->add_option("--mechanism", mechanism, "full, task-adapter or lora");
  fin->add_option("--task", task, "summarization or mnp");
  fin->add_option("--steps", steps, "Training steps");

  // train-fusion
  auto* fus = app.add_subcommand("train-fusion", "AdapterFusion training");
  fus->add_option("--task", task, "summarization or mnp");
  fus->add_option("--langs", langs, "Adapter stack (default every language adapter)")
      ->delimiter(',');
  fus->add_option("--steps", steps, "Training steps");

  // train-advfusion
  std::optional<std::size_t> phase1, phase2;
  std::string exclusion = "exclude";
  auto* adv = app.add_subcommand("train-advfusion", "Two-phase AdvFusion training");
  adv->add_option("--task", task, "summarization or mnp");
  adv->add_option("--langs", langs, "Adapter stack (default every language adapter)")
      ->delimiter(',');
  adv->add_option("--phase1-steps", phase1, "Steps with the batch language excluded");
  adv->add_option("--phase2-steps", phase2, "Steps with every adapter");
  adv->add_option("--exclusion-mode", exclusion, "exclude or zero-weights");

  // eval
  std::string split_name = "test";
  auto* ev = app.add_subcommand("eval", "Greedy decoding and metrics");
  ev->add_option("--task", task, "summarization or mnp");
  ev->add_option("--split", split_name, "train, valid or test");
  ev->add_option("--out", out_path, "Report JSON (default stdout)");
  bool no_predictions = false;
  ev->add_flag("--no-predictions", no_predictions, "Omit decoded outputs from the report");

  // analyze-attention
  std::optional<std::size_t> heatmap;
  std::string heatmap_out;
  std::size_t heatmap_layer = 0;
  auto* an = app.add_subcommand("analyze-attention", "Per-layer adapter contributions");
  an->add_option("--task", task, "summarization or mnp");
  an->add_option("--split", split_name, "train, valid or test");
  an->add_option("--out", out_path, "Contribution CSV (default stdout)");
  an->add_option("--heatmap", heatmap, "Example index for a token heatmap");
  an->add_option("--heatmap-out", heatmap_out, "Heatmap CSV path");
  an->add_option("--layer", heatmap_layer, "Heatmap layer");

  // param-report
  bool reference_shape = false;
  std::string lang;
  auto* pr = app.add_subcommand("param-report", "Trainable and frozen parameter counts");
  pr->add_option("--mechanism", mechanism,
                 "none, full, task-adapter, lora, fusion, advfusion or language-adapter");
  pr->add_option("--langs", langs, "Language adapters to include")->delimiter(',');
  pr->add_option("--lang", lang, "Adapter trained by language-adapter");
  pr->add_flag("--reference-shape", reference_shape, "12-layer, 768-wide configuration");

  // checkpoint-inspect
  bool list_entries = false;
  auto* ci = app.add_subcommand("checkpoint-inspect", "Print a checkpoint manifest");
  ci->add_flag("--entries", list_entries, "List every entry");

  for (auto* s : app.get_subcommands([](CLI::App*) { return true; })) add_common(s, ctx.common);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 1;
  }
  const bool mechanism_given = pr->count("--mechanism") > 0;

  try {
    ctx.load_config();
    auto& cfg = ctx.cfg;
    if (steps) cfg.train.max_steps = *steps;
    std::ofstream log;

    if (gen->parsed()) {
      if (counts.empty()) {
        counts.assign(n_langs, 200);
        if (n_langs >= 3) counts.back() = 40;
      }
      if (counts.size() != n_langs)
        throw UsageError("--counts needs one value per language");
      save_jsonl(gen_synthetic(n_langs, counts, ctx.common.seed), out_path);
      out << "wrote " << out_path << '\n';
    } else if (tok->parsed()) {
      const auto c = ctx.corpus();
      std::vector<std::string> texts;
      for (auto i : c.train) {
        texts.push_back(c.examples[i].code);
        texts.push_back(c.examples[i].doc);
      }
      const auto v = train_bpe(texts, vocab_size.value_or(cfg.vocab_size));
      v.save(out_path);
      out << "vocabulary of " << v.size() << " tokens written to " << out_path << '\n';
    } else if (pre->parsed()) {
      const auto c = ctx.corpus();
      auto l = ctx.model();
      auto hooks = ctx.hooks(log);
      if (langs.empty()) langs = c.languages();
      for (const auto& lg : langs) {
        std::vector<std::vector<TokenId>> seqs;
        for (auto i : c.select(Split::kTrain, lg)) {
          auto ids = l.vocab.encode(c.examples[i].code);
          if (ids.size() > l.model->config().max_len) ids.resize(l.model->config().max_len);
          seqs.push_back(std::move(ids));
        }
        ctx.summary("language adapter " + lg,
                    train_language_adapter(*l.model, lg, seqs, cfg.train, hooks));
      }
      ctx.save(*l.model, l.vocab, "pretrain-lang-adapter");
    } else if (fin->parsed()) {
      const auto c = ctx.corpus();
      auto l = ctx.model();
      const auto t = parse_task(task);
      const auto data =
          prepare_examples(c, c.train, l.vocab, t, l.model->config().max_len);
      ctx.summary("finetune " + mechanism,
                  finetune(*l.model, parse_mechanism(mechanism), data, cfg.train, ctx.hooks(log)));
      ctx.save(*l.model, l.vocab, "finetune");
    } else if (fus->parsed() || adv->parsed()) {
      const auto c = ctx.corpus();
      auto l = ctx.model();
      const auto t = parse_task(task);
      const auto data =
          prepare_examples(c, c.train, l.vocab, t, l.model->config().max_len);
      const auto tags = stack_tags(*l.model, langs);
      auto hooks = ctx.hooks(log);
      if (fus->parsed()) {
        ctx.summary("fusion", train_fusion(*l.model, tags, data, cfg.train, hooks));
      } else {
        PhaseSchedule s;
        const std::size_t total = cfg.train.max_steps;
        s.phase1_steps = phase1.value_or(phase2 ? (total > *phase2 ? total - *phase2 : 0) : total / 2);
        s.phase2_steps = phase2.value_or(total > s.phase1_steps ? total - s.phase1_steps : 0);
        s.exclusion_mode = parse_exclusion_mode(exclusion);
        auto tc = cfg.train;
        tc.max_steps = s.phase1_steps + s.phase2_steps;
        ctx.summary("advfusion", train_advfusion(*l.model, tags, data, s, tc, hooks));
      }
      ctx.save(*l.model, l.vocab, fus->parsed() ? "train-fusion" : "train-advfusion");
    } else if (ev->parsed()) {
      const auto c = ctx.corpus();
      auto l = ctx.model();
      const auto t = parse_task(task);
      const auto data = prepare_examples(c, c.split(parse_split(split_name)), l.vocab, t,
                                         l.model->config().max_len);
      const auto rep = corpus_eval(*l.model, data, l.vocab, t, cfg.max_new);
      write_text(out_path, report_json(rep, !no_predictions) + "\n", out);
    } else if (an->parsed()) {
      const auto c = ctx.corpus();
      auto l = ctx.model();
      if (l.model->slots().mechanism != Mechanism::kFusion)
        throw UsageError("analyze-attention needs a checkpoint with fusion attached");
      const auto t = parse_task(task);
      auto data = prepare_examples(c, c.split(parse_split(split_name)), l.vocab, t,
                                   l.model->config().max_len);
      const auto tags = l.model->slots().stack.tags();
      const auto n_layers = l.model->config().n_layers;
      if (heatmap) {
        if (*heatmap >= data.size())
          throw UsageError("--heatmap index " + std::to_string(*heatmap) + " out of range [0, " +
                           std::to_string(data.size()) + ")");
        if (heatmap_out.empty()) throw UsageError("--heatmap needs --heatmap-out");
        AttentionTrace tr(n_layers, tags, true);
        corpus_eval(*l.model, std::span(&data[*heatmap], 1), l.vocab, t, cfg.max_new, &tr);
        heatmap_export(tr, l.vocab, heatmap_layer, heatmap_out);
        out << "heatmap of example " << *heatmap << " layer " << heatmap_layer << " written to "
            << heatmap_out << '\n';
      }
      AttentionTrace tr(n_layers, tags);
      corpus_eval(*l.model, data, l.vocab, t, cfg.max_new, &tr);
      std::ostringstream csv;
      write_contributions_csv(contributions(tr), csv);
      write_text(out_path, csv.str(), out);
    } else if (pr->parsed()) {
      std::vector<ParamSpec> specs;
      std::string mech = mechanism_given ? mechanism : "none";
      if (!ctx.common.checkpoint_in.empty()) {
        const auto m = read_manifest(ctx.common.checkpoint_in);
        for (const auto& e : m.entries) specs.push_back({e.name, e.shape, e.group});
        if (!mechanism_given) {
          switch (m.attachment.mechanism) {
            case Mechanism::kNone: mech = "none"; break;
            case Mechanism::kAdapter: mech = "task-adapter"; break;
            case Mechanism::kLora: mech = "lora"; break;
            case Mechanism::kFusion:
              mech = m.attachment.fusion_mode == FusionMode::kAdvFusion ? "advfusion" : "fusion";
              break;
          }
        }
      } else {
        auto mc = reference_shape ? ModelConfig::reference_shape() : cfg.model;
        if (!reference_shape && !ctx.common.vocab.empty())
          mc.vocab = Vocabulary::load_file(ctx.common.vocab).size();
        mc.validate();
        specs = backbone_specs(mc);
        auto add = [&specs](std::vector<ParamSpec> more) {
          specs.insert(specs.end(), more.begin(), more.end());
        };
        for (const auto& lg : langs) add(adapter_specs(mc, lg));
        if (!lang.empty() && std::find(langs.begin(), langs.end(), lang) == langs.end())
          add(adapter_specs(mc, lang));
        if (mech == "task-adapter") add(adapter_specs(mc, "task"));
        if (mech == "lora") add(lora_specs(mc));
        if (mech == "fusion" || mech == "advfusion") {
          if (langs.empty()) throw UsageError("--langs is required for fusion counts");
          add(fusion_specs(mc));
        }
      }
      std::vector<std::string> groups;
      for (const auto& s : specs)
        if (std::find(groups.begin(), groups.end(), s.group) == groups.end())
          groups.push_back(s.group);
      const auto train = trainable_groups(mech, lang, groups);
      for (const auto& g : train)
        if (std::find(groups.begin(), groups.end(), g) == groups.end())
          throw LookupError("group '" + g + "' is not present");
      std::size_t trainable = 0, frozen = 0;
      json by_group = json::object();
      for (const auto& g : groups) {
        std::vector<ParamSpec> sub;
        for (const auto& s : specs)
          if (s.group == g) sub.push_back(s);
        const auto n = count_specs(sub);
        (train.count(g) ? trainable : frozen) += n;
        by_group[g] = {{"count", n}, {"trainable", train.count(g) > 0}};
      }
      const json rep{{"mechanism", mech},
                     {"trainable", trainable},
                     {"frozen", frozen},
                     {"total", trainable + frozen},
                     {"trainable_ratio", static_cast<double>(trainable) /
                                             static_cast<double>(trainable + frozen)},
                     {"groups", by_group}};
      out << rep.dump(2) << '\n';
    } else if (ci->parsed()) {
      if (ctx.common.checkpoint_in.empty()) throw UsageError("--checkpoint-in is required");
      const auto m = read_manifest(ctx.common.checkpoint_in);
      json groups = json::object();
      for (const auto& g : m.groups()) {
        std::size_t n = 0, k = 0;
        for (const auto& e : m.entries)
          if (e.group == g) {
            n += e.length / 4;
            ++k;
          }
        groups[g] = {{"entries", k}, {"parameters", n}};
      }
      const auto& mc = m.config;
      json j{{"format_version", m.format_version},
             {"seed", m.seed},
             {"config",
              {{"n_layers", mc.n_layers}, {"hidden", mc.hidden}, {"n_heads", mc.n_heads},
               {"ff_dim", mc.ff_dim}, {"vocab", mc.vocab}, {"max_len", mc.max_len},
               {"n_decoder_layers", mc.n_decoder_layers}, {"adapter_dim", mc.bottleneck()},
               {"lora_rank", mc.lora_rank}, {"lora_alpha", mc.lora_alpha}}},
             {"attachment",
              {{"mechanism", to_string(m.attachment.mechanism)},
               {"adapter_tag", m.attachment.adapter_tag},
               {"stack_tags", m.attachment.stack_tags},
               {"fusion_mode",
                m.attachment.fusion_mode == FusionMode::kAdvFusion ? "advfusion" : "fusion"}}},
             {"groups", groups},
             {"data_bytes", m.data_bytes()},
             {"has_vocabulary", m.vocabulary.has_value()},
             {"meta", json::parse(m.meta)}};
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.checksum));
      j["checksum"] = hex;
      if (list_entries) {
        json es = json::array();
        for (const auto& e : m.entries)
          es.push_back({{"name", e.name}, {"shape", e.shape}, {"group", e.group},
                        {"offset", e.offset}, {"length", e.length}});
        j["entries"] = es;
      }
      out << j.dump(2) << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"advfusion"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace advf
