// SPDX-License-Identifier: Apache-2.0
#include "advf/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "advf/error.hpp"
#include "advf/tokenizer.hpp"

namespace advf {
namespace {

using Gram = std::vector<std::string>;

std::map<Gram, std::size_t> ngrams(std::span<const std::string> toks, std::size_t n) {
  std::map<Gram, std::size_t> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++out[Gram(toks.begin() + static_cast<std::ptrdiff_t>(i),
               toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

struct Counts {
  std::array<std::size_t, 4> match{}, total{};
  std::size_t c = 0, r = 0;
};

void accumulate(Counts& k, std::span<const std::string> cand, std::span<const std::string> ref) {
  k.c += cand.size();
  k.r += ref.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cg = ngrams(cand, n);
    const auto rg = ngrams(ref, n);
    for (const auto& [g, cnt] : cg) {
      auto it = rg.find(g);
      k.match[n - 1] += std::min(cnt, it == rg.end() ? std::size_t{0} : it->second);
      k.total[n - 1] += cnt;
    }
  }
}

BleuReport finish(const Counts& k) {
  BleuReport rep;
  rep.candidate_length = k.c;
  rep.reference_length = k.r;
  if (k.c == 0) return rep;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    const double p = n == 0 ? static_cast<double>(k.match[0]) / static_cast<double>(k.total[0])
                            : (static_cast<double>(k.match[n]) + 1.0) /
                                  (static_cast<double>(k.total[n]) + 1.0);
    rep.precision[n] = p;
    if (p == 0.0)
      zero = true;
    else
      log_sum += std::log(p);
  }
  rep.brevity_penalty =
      k.c < k.r ? std::exp(1.0 - static_cast<double>(k.r) / static_cast<double>(k.c)) : 1.0;
  rep.score = zero ? 0.0 : rep.brevity_penalty * std::exp(log_sum / 4.0) * 100.0;
  return rep;
}

}  // namespace

std::vector<std::string> bleu_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || c == '_' || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      out.emplace_back(1, ch);
    }
  }
  flush();
  return out;
}

BleuReport smoothed_bleu4(std::span<const std::string> candidate,
                          std::span<const std::string> reference) {
  if (reference.empty()) throw DataError("smoothed_bleu4: empty reference");
  Counts k;
  accumulate(k, candidate, reference);
  return finish(k);
}

BleuReport smoothed_bleu4(std::string_view candidate, std::string_view reference) {
  const auto c = bleu_tokens(candidate), r = bleu_tokens(reference);
  return smoothed_bleu4(c, r);
}

BleuReport corpus_bleu4(const std::vector<std::vector<std::string>>& candidates,
                        const std::vector<std::vector<std::string>>& references) {
  if (candidates.size() != references.size())
    throw DimensionError("corpus_bleu4: " + std::to_string(candidates.size()) +
                         " candidates vs " + std::to_string(references.size()) + " references");
  if (references.empty()) throw DataError("corpus_bleu4: no pairs");
  Counts k;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw DataError("corpus_bleu4: empty reference");
    accumulate(k, candidates[i], references[i]);
  }
  return finish(k);
}

PrfReport prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrfReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

PrfReport token_prf(std::span<const std::string> predicted, std::span<const std::string> gold,
                    Intersection mode) {
  if (gold.empty()) throw DataError("token_prf: empty gold name");
  std::vector<std::string> p(predicted.begin(), predicted.end()), g(gold.begin(), gold.end());
  std::sort(p.begin(), p.end());
  std::sort(g.begin(), g.end());
  if (mode == Intersection::kSet) {
    p.erase(std::unique(p.begin(), p.end()), p.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }
  std::vector<std::string> common;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
  const std::size_t tp = common.size();
  return prf_from_counts(tp, p.size() - tp, g.size() - tp);
}

PrfReport token_prf(std::string_view predicted, std::string_view gold, Intersection mode) {
  const auto p = subtokenize_name(predicted), g = subtokenize_name(gold);
  return token_prf(p, g, mode);
}

}  // namespace advf
