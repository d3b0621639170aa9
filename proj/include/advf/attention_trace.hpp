// SPDX-License-Identifier: Apache-2.0
//
// Accumulation of fusion attention over an evaluation run and the per-layer
// language contribution report derived from it.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "advf/tensor.hpp"

namespace advf {

class Vocabulary;

struct TokenAttention {
  std::size_t example = 0;
  std::size_t position = 0;
  TokenId token = 0;
  std::size_t layer = 0;
  std::size_t adapter = 0;
  double attention = 0.0;
};

class AttentionTrace {
 public:
  AttentionTrace(std::size_t n_layers, std::vector<std::string> adapter_tags,
                 bool per_token = false);

  /// Adds one fusion call. `attention` is [tokens.size(), n_adapters]
  /// row-major with zeros in excluded columns.
  void record(std::span<const double> attention, std::size_t layer,
              std::span<const TokenId> tokens);

  /// Starts a new example for per-token records.
  void begin_example();

  std::size_t n_layers() const { return token_count_.size(); }
  std::size_t n_adapters() const { return tags_.size(); }
  const std::vector<std::string>& tags() const { return tags_; }
  double sum(std::size_t layer, std::size_t adapter) const {
    return sums_[layer * tags_.size() + adapter];
  }
  std::size_t token_count(std::size_t layer) const { return token_count_[layer]; }
  bool per_token_enabled() const { return per_token_; }
  const std::vector<TokenAttention>& per_token() const { return records_; }
  std::size_t examples() const { return examples_; }

 private:
  std::vector<std::string> tags_;
  std::vector<double> sums_;
  std::vector<std::size_t> token_count_;
  bool per_token_;
  std::vector<TokenAttention> records_;
  std::size_t examples_ = 0;
};

struct LayerContribution {
  std::vector<double> mean;        // attention mass per token
  std::vector<double> normalized;  // min-max scaled to [0, 1]
  std::vector<double> percentage;  // normalized / sum * 100
};

struct ContributionReport {
  std::vector<std::string> tags;
  std::vector<LayerContribution> layers;
};

/// Per layer: mean attention per adapter, min-max normalisation, then
/// renormalisation to percentages. Layers where every mean is equal get
/// uniform contributions.
ContributionReport contributions(const AttentionTrace& trace);

/// CSV with columns layer,adapter_tag,mean_attention,normalized,percentage.
void write_contributions_csv(const ContributionReport& report, std::ostream& out);
void write_contributions_csv(const ContributionReport& report, const std::string& path);

/// Heatmap of one layer of a single-example trace: one row per adapter, one
/// column per token, header row of decoded token texts.
void heatmap_export(const AttentionTrace& trace, const Vocabulary& vocab, std::size_t layer,
                    std::ostream& out);
void heatmap_export(const AttentionTrace& trace, const Vocabulary& vocab, std::size_t layer,
                    const std::string& path);

}  // namespace advf
