// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used as test oracles.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "advf/rng.hpp"

namespace advf::testing {

using Toks = std::vector<std::string>;

// Brute-force oracle: every n-gram is compared position by position, no maps.
inline double bleu_oracle(const Toks& c, const Toks& r) {
  if (c.empty()) return 0.0;
  auto same = [](const Toks& a, std::size_t i, const Toks& b, std::size_t j, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k)
      if (a[i + k] != b[j + k]) return false;
    return true;
  };
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    double match = 0.0, total = 0.0;
    for (std::size_t i = 0; i + n <= c.size(); ++i) {
      total += 1.0;
      // Credit this occurrence only while it stays within the reference count.
      std::size_t seen_before = 0, in_ref = 0;
      for (std::size_t j = 0; j < i; ++j) seen_before += same(c, i, c, j, n);
      for (std::size_t j = 0; j + n <= r.size(); ++j) in_ref += same(c, i, r, j, n);
      if (seen_before < in_ref) match += 1.0;
    }
    const double p = n == 1 ? match / total : (match + 1.0) / (total + 1.0);
    if (p == 0.0) return 0.0;
    log_sum += std::log(p);
  }
  const double c_len = static_cast<double>(c.size()), r_len = static_cast<double>(r.size());
  const double bp = c_len < r_len ? std::exp(1.0 - r_len / c_len) : 1.0;
  return bp * std::exp(log_sum / 4.0) * 100.0;
}

inline Toks random_tokens(Rng& rng, std::size_t lo, std::size_t hi, std::size_t alphabet) {
  Toks t(lo + rng.below(hi - lo + 1));
  for (auto& s : t) s = "w" + std::to_string(rng.below(alphabet));
  return t;
}

inline std::size_t multiset_oracle(const Toks& p, const Toks& g) {
  std::vector<bool> used(g.size(), false);
  std::size_t tp = 0;
  for (const auto& t : p)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (!used[j] && g[j] == t) {
        used[j] = true;
        ++tp;
        break;
      }
  return tp;
}

}  // namespace advf::testing
