// SPDX-License-Identifier: Apache-2.0
#include "advf/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "advf/error.hpp"
#include "advf/rng.hpp"
#include "advf/special_tokens.hpp"
#include "advf/tokenizer.hpp"

namespace advf {
namespace {

using json = nlohmann::json;

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string required_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end())
    throw DataError("line " + std::to_string(line) + ": missing field \"" + key + "\"");
  if (!it->is_string())
    throw DataError("line " + std::to_string(line) + ": field \"" + key + "\" is not a string");
  return it->get<std::string>();
}

}  // namespace

const std::vector<std::size_t>& Corpus::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kValid: return valid;
    case Split::kTest: return test;
  }
  return train;
}

std::map<std::string, std::size_t> Corpus::language_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& e : examples) ++out[e.lang];
  return out;
}

std::vector<std::string> Corpus::languages() const {
  std::vector<std::string> out;
  for (const auto& e : examples)
    if (std::find(out.begin(), out.end(), e.lang) == out.end()) out.push_back(e.lang);
  return out;
}

std::vector<std::size_t> Corpus::select(Split s, const std::string& lang) const {
  std::vector<std::size_t> out;
  for (auto i : split(s))
    if (examples[i].lang == lang) out.push_back(i);
  return out;
}

Corpus parse_jsonl(std::istream& in) {
  Corpus c;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(n) + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError("line " + std::to_string(n) + ": expected an object");
    Example ex;
    ex.lang = required_string(j, "lang", n);
    ex.code = required_string(j, "code", n);
    ex.doc = required_string(j, "doc", n);
    if (ex.lang.empty()) throw DataError("line " + std::to_string(n) + ": empty \"lang\"");
    if (ex.code.empty()) throw DataError("line " + std::to_string(n) + ": empty \"code\"");
    if (auto it = j.find("name"); it != j.end() && !it->is_null()) {
      if (!it->is_string())
        throw DataError("line " + std::to_string(n) + ": field \"name\" is not a string");
      ex.name = it->get<std::string>();
    }
    c.examples.push_back(std::move(ex));
  }
  if (c.examples.empty()) throw DataError("corpus holds no records");
  return c;
}

Corpus load_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read corpus " + path);
  try {
    return parse_jsonl(f);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void save_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& e : corpus.examples) {
    json j{{"lang", e.lang}, {"code", e.code}, {"doc", e.doc}};
    if (e.name) j["name"] = *e.name;
    out << j.dump() << '\n';
  }
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write corpus " + path);
  save_jsonl(corpus, f);
}

Corpus split(Corpus corpus, std::span<const double> ratios, std::uint64_t seed) {
  if (ratios.empty() || ratios.size() > 3)
    throw ConfigError("split needs one to three ratios, got " + std::to_string(ratios.size()));
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be nonnegative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split ratios sum to " + std::to_string(total) + ", expected 1");

  std::vector<std::vector<std::size_t>*> out{&corpus.train, &corpus.valid, &corpus.test};
  for (auto* v : out) v->clear();
  const std::size_t k = ratios.size();
  for (const auto& lang : corpus.languages()) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.examples.size(); ++i)
      if (corpus.examples[i].lang == lang) idx.push_back(i);
    if (idx.size() < k)
      throw DataError("language '" + lang + "' has " + std::to_string(idx.size()) +
                      " examples, fewer than the " + std::to_string(k) + " splits");
    Rng rng(seed, "split:" + lang);
    rng.shuffle(idx.begin(), idx.end());

    // Largest remainder, then at least one example per split.
    const std::size_t n = idx.size();
    std::vector<std::size_t> take(k);
    std::vector<double> frac(k);
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < k; ++s) {
      const double want = ratios[s] * static_cast<double>(n);
      take[s] = static_cast<std::size_t>(std::floor(want + 1e-9));
      frac[s] = want - static_cast<double>(take[s]);
      assigned += take[s];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++take[order[i % k]];
    for (std::size_t s = 0; s < k; ++s) {
      while (take[s] == 0) {
        auto big = std::max_element(take.begin(), take.end());
        --*big;
        ++take[s];
      }
    }
    std::size_t at = 0;
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t j = 0; j < take[s]; ++j) out[s]->push_back(idx[at++]);
  }
  for (auto* v : out) std::sort(v->begin(), v->end());
  return corpus;
}

std::vector<std::string> low_resource_languages(const Corpus& corpus) {
  const auto counts = corpus.language_counts();
  std::size_t mx = 0;
  for (const auto& [_, c] : counts) mx = std::max(mx, c);
  std::vector<std::string> out;
  for (const auto& lang : corpus.languages())
    if (counts.at(lang) * 5 <= mx) out.push_back(lang);
  return out;
}

std::string name_target_text(const std::string& name) {
  std::string out;
  for (const auto& s : subtokenize_name(name)) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

MaskedName mask_method_name(const Example& ex, const Vocabulary& vocab) {
  if (!ex.name || ex.name->empty()) throw DataError("example has no method name to mask");
  const auto& name = *ex.name;
  const std::string_view code = ex.code;
  MaskedName out;
  std::size_t from = 0, hits = 0;
  for (std::size_t pos = code.find(name); pos != std::string_view::npos;
       pos = code.find(name, pos + 1)) {
    const std::size_t end = pos + name.size();
    const bool left_ok = pos == 0 || !ident_char(code[pos - 1]);
    const bool right_ok = end == code.size() || !ident_char(code[end]);
    if (!left_ok || !right_ok || pos < from) continue;
    const auto seg = vocab.encode(code.substr(from, pos - from));
    out.input.insert(out.input.end(), seg.begin(), seg.end());
    out.input.push_back(special::kNameMask);
    from = end;
    ++hits;
  }
  if (hits == 0) throw DataError("method name '" + name + "' does not occur in the code");
  const auto tail = vocab.encode(code.substr(from));
  out.input.insert(out.input.end(), tail.begin(), tail.end());
  out.target = vocab.encode(name_target_text(name));
  return out;
}

}  // namespace advf
