// SPDX-License-Identifier: Apache-2.0
#include "advf/evaluation.hpp"

#include "json.hpp"

#include "advf/attention_trace.hpp"
#include "advf/error.hpp"
#include "advf/special_tokens.hpp"
#include "advf/tokenizer.hpp"

namespace advf {

template <typename T>
EvalReport corpus_eval(const TransformerModel<T>& model, std::span<const Seq2SeqExample> data,
                       const Vocabulary& vocab, Task task, std::size_t max_new,
                       AttentionTrace* trace) {
  if (data.empty()) throw DataError("evaluation split is empty");
  NoGradGuard guard;
  EvalReport rep;
  rep.task = task;
  rep.examples = data.size();
  std::vector<std::vector<std::string>> cands, refs;
  std::map<std::string, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  std::array<std::size_t, 3> total{};
  for (const auto& ex : data) {
    EncodeOptions o;
    o.truncate = true;
    o.trace = trace;
    if (trace) trace->begin_example();
    const auto enc = model.encode(ex.input, o);
    auto ids = model.decode_generate(enc.states, max_new);
    if (!ids.empty() && ids.back() == special::kEos) ids.pop_back();
    const auto text = vocab.decode(ids);
    rep.predictions.push_back(text);
    auto& lr = rep.per_language[ex.lang];
    ++lr.examples;
    if (task == Task::kSummarization) {
      auto c = bleu_tokens(text), r = bleu_tokens(ex.reference);
      if (r.empty()) throw DataError("evaluation example with an empty reference");
      const double s = smoothed_bleu4(c, r).score;
      rep.bleu += s;
      lr.bleu += s;
      cands.push_back(std::move(c));
      refs.push_back(std::move(r));
    } else {
      const auto p = token_prf(text, ex.reference);
      for (auto* k : {&counts[ex.lang], &total}) {
        (*k)[0] += p.tp;
        (*k)[1] += p.fp;
        (*k)[2] += p.fn;
      }
    }
  }
  if (task == Task::kSummarization) {
    rep.bleu /= static_cast<double>(rep.examples);
    for (auto& [_, lr] : rep.per_language) lr.bleu /= static_cast<double>(lr.examples);
    rep.corpus_bleu = corpus_bleu4(cands, refs).score;
  } else {
    rep.prf = prf_from_counts(total[0], total[1], total[2]);
    for (auto& [lang, lr] : rep.per_language) {
      const auto& k = counts[lang];
      lr.prf = prf_from_counts(k[0], k[1], k[2]);
    }
  }
  return rep;
}

std::string report_json(const EvalReport& r, bool with_predictions) {
  using nlohmann::json;
  auto prf = [](const PrfReport& p) {
    return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
                {"tp", p.tp},               {"fp", p.fp},         {"fn", p.fn}};
  };
  json j{{"task", to_string(r.task)}, {"examples", r.examples}};
  if (r.task == Task::kSummarization) {
    j["bleu"] = r.bleu;
    j["corpus_bleu"] = r.corpus_bleu;
  } else {
    j["prf"] = prf(r.prf);
  }
  json langs = json::object();
  for (const auto& [lang, lr] : r.per_language) {
    json l{{"examples", lr.examples}};
    if (r.task == Task::kSummarization)
      l["bleu"] = lr.bleu;
    else
      l["prf"] = prf(lr.prf);
    langs[lang] = l;
  }
  j["per_language"] = langs;
  if (with_predictions) j["predictions"] = r.predictions;
  // Decoded bytes need not be valid UTF-8.
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

template EvalReport corpus_eval(const TransformerModel<float>&, std::span<const Seq2SeqExample>,
                                const Vocabulary&, Task, std::size_t, AttentionTrace*);
template EvalReport corpus_eval(const TransformerModel<double>&, std::span<const Seq2SeqExample>,
                                const Vocabulary&, Task, std::size_t, AttentionTrace*);

}  // namespace advf
