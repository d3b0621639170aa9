// SPDX-License-Identifier: Apache-2.0
#include "advf/attention_trace.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "advf/error.hpp"
#include "advf/tokenizer.hpp"

namespace advf {
namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && !s.empty() && s.front() != ' ' &&
      s.back() != ' ')
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// Control bytes rendered as C escapes so every header stays on one line.
std::string printable(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (c == '\n') out += "\\n";
    else if (c == '\t') out += "\\t";
    else if (c == '\r') out += "\\r";
    else if (c < 0x20 || c == 0x7f) {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02x", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  return f;
}

}  // namespace

AttentionTrace::AttentionTrace(std::size_t n_layers, std::vector<std::string> adapter_tags,
                               bool per_token)
    : tags_(std::move(adapter_tags)),
      sums_(n_layers * tags_.size(), 0.0),
      token_count_(n_layers, 0),
      per_token_(per_token) {
  if (n_layers == 0 || tags_.empty())
    throw UsageError("attention trace needs at least one layer and one adapter");
}

void AttentionTrace::begin_example() { ++examples_; }

void AttentionTrace::record(std::span<const double> attention, std::size_t layer,
                            std::span<const TokenId> tokens) {
  const std::size_t N = tags_.size();
  if (layer >= n_layers())
    throw UsageError("trace layer " + std::to_string(layer) + " out of range [0, " +
                     std::to_string(n_layers()) + ")");
  if (attention.size() != tokens.size() * N)
    throw DimensionError("trace record: " + std::to_string(attention.size()) +
                         " weights for " + std::to_string(tokens.size()) + " tokens x " +
                         std::to_string(N) + " adapters");
  const std::size_t example = examples_ == 0 ? 0 : examples_ - 1;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (std::size_t n = 0; n < N; ++n) {
      const double a = attention[t * N + n];
      sums_[layer * N + n] += a;
      if (per_token_) records_.push_back({example, t, tokens[t], layer, n, a});
    }
  }
  token_count_[layer] += tokens.size();
}

ContributionReport contributions(const AttentionTrace& trace) {
  ContributionReport rep;
  rep.tags = trace.tags();
  const std::size_t N = trace.n_adapters();
  for (std::size_t l = 0; l < trace.n_layers(); ++l) {
    const auto count = trace.token_count(l);
    if (count == 0)
      throw DataError("layer " + std::to_string(l) + " recorded no tokens");
    LayerContribution lc;
    for (std::size_t n = 0; n < N; ++n)
      lc.mean.push_back(trace.sum(l, n) / static_cast<double>(count));
    const auto [lo, hi] = std::minmax_element(lc.mean.begin(), lc.mean.end());
    const double mn = *lo, mx = *hi;
    if (mx == mn) {
      lc.normalized.assign(N, 1.0);
    } else {
      for (double m : lc.mean) lc.normalized.push_back((m - mn) / (mx - mn));
    }
    double total = 0.0;
    for (double v : lc.normalized) total += v;
    for (double v : lc.normalized) lc.percentage.push_back(v / total * 100.0);
    rep.layers.push_back(std::move(lc));
  }
  return rep;
}

void write_contributions_csv(const ContributionReport& report, std::ostream& out) {
  out << "layer,adapter_tag,mean_attention,normalized,percentage\n";
  out << std::setprecision(17);
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const auto& lc = report.layers[l];
    for (std::size_t n = 0; n < report.tags.size(); ++n)
      out << l << ',' << csv_field(report.tags[n]) << ',' << lc.mean[n] << ','
          << lc.normalized[n] << ',' << lc.percentage[n] << '\n';
  }
}

void write_contributions_csv(const ContributionReport& report, const std::string& path) {
  auto f = open_out(path);
  write_contributions_csv(report, f);
}

void heatmap_export(const AttentionTrace& trace, const Vocabulary& vocab, std::size_t layer,
                    std::ostream& out) {
  if (!trace.per_token_enabled())
    throw UsageError("heatmap export needs a trace recorded with per-token records");
  if (trace.examples() > 1)
    throw UsageError("heatmap export needs a single-example trace, got " +
                     std::to_string(trace.examples()));
  if (layer >= trace.n_layers())
    throw UsageError("heatmap layer " + std::to_string(layer) + " out of range");
  const std::size_t N = trace.n_adapters();
  std::vector<TokenId> tokens;
  std::vector<std::vector<double>> rows(N);
  for (const auto& r : trace.per_token()) {
    if (r.layer != layer) continue;
    if (r.adapter == 0) tokens.push_back(r.token);
    rows[r.adapter].push_back(r.attention);
  }
  out << "adapter";
  for (TokenId t : tokens) out << ',' << csv_field(printable(vocab.token_text(t)));
  out << '\n' << std::setprecision(17);
  for (std::size_t n = 0; n < N; ++n) {
    out << csv_field(trace.tags()[n]);
    for (double v : rows[n]) out << ',' << v;
    out << '\n';
  }
}

void heatmap_export(const AttentionTrace& trace, const Vocabulary& vocab, std::size_t layer,
                    const std::string& path) {
  auto f = open_out(path);
  heatmap_export(trace, vocab, layer, f);
}

}  // namespace advf
