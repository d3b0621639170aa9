// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "advf/metrics.hpp"
#include "advf/model.hpp"
#include "advf/trainer.hpp"

namespace advf {

class AttentionTrace;
class Vocabulary;

struct LanguageReport {
  std::size_t examples = 0;
  double bleu = 0.0;  // mean sentence-level smoothed BLEU-4
  PrfReport prf;      // micro-averaged over subtoken counts
};

struct EvalReport {
  Task task = Task::kSummarization;
  std::size_t examples = 0;
  double bleu = 0.0;
  double corpus_bleu = 0.0;
  PrfReport prf;
  std::map<std::string, LanguageReport> per_language;
  std::vector<std::string> predictions;
};

/// Greedy-decodes every example. When `trace` is given, fusion attention of
/// each example is recorded into it. Throws DataError for an empty split.
template <typename T>
EvalReport corpus_eval(const TransformerModel<T>& model, std::span<const Seq2SeqExample> data,
                       const Vocabulary& vocab, Task task, std::size_t max_new,
                       AttentionTrace* trace = nullptr);

/// JSON object with the aggregate, per-language scores and predictions.
std::string report_json(const EvalReport& report, bool with_predictions = true);

}  // namespace advf
