// SPDX-License-Identifier: Apache-2.0
//
// Bimodal (code, doc) examples, JSONL ingestion, stratified splits, method
// name masking and the synthetic multilingual generator.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advf/tensor.hpp"

namespace advf {

class Vocabulary;

struct Example {
  std::string lang;
  std::string code;
  std::string doc;
  std::optional<std::string> name;

  bool operator==(const Example&) const = default;
};

enum class Split { kTrain, kValid, kTest };

struct Corpus {
  std::vector<Example> examples;
  std::vector<std::size_t> train, valid, test;

  const std::vector<std::size_t>& split(Split s) const;
  std::map<std::string, std::size_t> language_counts() const;
  /// Languages in order of first appearance.
  std::vector<std::string> languages() const;
  /// Indices of `lang` within split `s`.
  std::vector<std::size_t> select(Split s, const std::string& lang) const;
};

/// One JSON object per line with string fields lang, code, doc and an
/// optional name. Blank lines are skipped; duplicates are kept.
Corpus parse_jsonl(std::istream& in);
Corpus load_jsonl(const std::string& path);
void save_jsonl(const Corpus& corpus, std::ostream& out);
void save_jsonl(const Corpus& corpus, const std::string& path);

/// Stratified by language. `ratios` has one to three entries (train, valid,
/// test) summing to 1; each language gets at least one example per split.
Corpus split(Corpus corpus, std::span<const double> ratios, std::uint64_t seed);

/// Languages whose example count is at most 20% of the largest.
std::vector<std::string> low_resource_languages(const Corpus& corpus);

struct MaskedName {
  std::vector<TokenId> input;
  std::vector<TokenId> target;
};

/// Space-joined lowercase subtokens, e.g. "getUserName" -> "get user name".
std::string name_target_text(const std::string& name);

/// Replaces every whole-identifier occurrence of the example's name with the
/// name-mask token. Throws DataError when the name is missing or absent.
MaskedName mask_method_name(const Example& ex, const Vocabulary& vocab);

/// Template-generated functions for up to six toy languages sharing one
/// identifier pool and one documentation grammar. Every example carries a
/// name that occurs in its code.
Corpus gen_synthetic(std::size_t n_langs, std::span<const std::size_t> per_lang_counts,
                     std::uint64_t seed);

/// Tags gen_synthetic uses, in order.
std::vector<std::string> synthetic_language_tags(std::size_t n_langs);

}  // namespace advf
