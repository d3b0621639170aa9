// SPDX-License-Identifier: Apache-2.0
//
// Smoothed BLEU-4 for summaries and subtoken precision/recall/F1 for method
// names.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advf {

struct BleuReport {
  double score = 0.0;  // [0, 100]
  std::array<double, 4> precision{};
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

/// p1 is the clipped unigram precision; p2..p4 are (matches + 1) / (total + 1).
/// BP = exp(1 - r/c) when c < r. An empty candidate scores 0; an empty
/// reference is a DataError.
BleuReport smoothed_bleu4(std::span<const std::string> candidate,
                          std::span<const std::string> reference);
BleuReport smoothed_bleu4(std::string_view candidate, std::string_view reference);

/// Pooled n-gram counts over all pairs, same smoothing.
BleuReport corpus_bleu4(const std::vector<std::vector<std::string>>& candidates,
                        const std::vector<std::vector<std::string>>& references);

/// Lowercased whitespace tokens with punctuation split off.
std::vector<std::string> bleu_tokens(std::string_view text);

enum class Intersection { kMultiset, kSet };

struct PrfReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

PrfReport prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

/// Names are subtokenized (camelCase, snake_case, digits) before matching.
/// An empty gold name is a DataError.
PrfReport token_prf(std::string_view predicted, std::string_view gold,
                    Intersection mode = Intersection::kMultiset);
PrfReport token_prf(std::span<const std::string> predicted, std::span<const std::string> gold,
                    Intersection mode = Intersection::kMultiset);

}  // namespace advf
