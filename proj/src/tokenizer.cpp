// SPDX-License-Identifier: Apache-2.0
#include "advf/tokenizer.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "advf/error.hpp"
#include "advf/special_tokens.hpp"

namespace advf {
namespace {

bool is_word(unsigned char c) { return std::isalnum(c) || c == '_'; }

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 15]);
  }
  return out;
}

std::string from_hex(std::string_view hex, std::size_t line) {
  auto nibble = [line](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw DataError("vocabulary line " + std::to_string(line) + ": bad hex digit");
  };
  if (hex.empty() || hex.size() % 2)
    throw DataError("vocabulary line " + std::to_string(line) + ": bad hex token");
  std::string out;
  for (std::size_t i = 0; i < hex.size(); i += 2)
    out.push_back(static_cast<char>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
  return out;
}

}  // namespace

std::vector<std::string_view> chunk_text(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == ' ' && i + 1 < text.size() && is_word(static_cast<unsigned char>(text[i + 1]))) {
      j = i + 1;
      while (j < text.size() && is_word(static_cast<unsigned char>(text[j]))) ++j;
    } else if (is_word(c)) {
      while (j < text.size() && is_word(static_cast<unsigned char>(text[j]))) ++j;
    } else {
      j = i + 1;
    }
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (auto name : special::kNames) tokens_.emplace_back(name);
  for (int b = 0; b < 256; ++b) tokens_.emplace_back(1, static_cast<char>(b));
}

TokenId Vocabulary::add_merge(TokenId left, TokenId right) {
  const auto valid = [this](TokenId t) {
    return t >= static_cast<TokenId>(kByteBase) && static_cast<std::size_t>(t) < tokens_.size();
  };
  if (!valid(left) || !valid(right)) throw UsageError("merge of unknown or special token");
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(tokens_[left] + tokens_[right]);
  rank_.emplace(std::make_pair(left, right), merges_.size());
  merges_.emplace_back(left, right);
  return id;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::vector<TokenId> word;
  for (auto chunk : chunk_text(text)) {
    word.clear();
    for (unsigned char c : chunk) word.push_back(static_cast<TokenId>(kByteBase + c));
    while (word.size() > 1) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      std::size_t at = 0;
      for (std::size_t i = 0; i + 1 < word.size(); ++i) {
        auto it = rank_.find({word[i], word[i + 1]});
        if (it != rank_.end() && it->second < best) {
          best = it->second;
          at = i;
        }
      }
      if (best == std::numeric_limits<std::size_t>::max()) break;
      word[at] = static_cast<TokenId>(kBaseSize + best);
      word.erase(word.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    }
    out.insert(out.end(), word.begin(), word.end());
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids, bool keep_specials) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw DataError("decode: token id " + std::to_string(id) + " outside vocabulary");
    if (id < special::kCount && !keep_specials) continue;
    out += tokens_[id];
  }
  return out;
}

std::string Vocabulary::token_text(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw DataError("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

void Vocabulary::save(std::ostream& out) const {
  for (auto name : special::kNames) out << name << '\n';
  for (const auto& [l, r] : merges_) out << to_hex(tokens_[l]) << ' ' << to_hex(tokens_[r]) << '\n';
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write vocabulary to " + path);
  save(f);
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary v;
  std::string line;
  std::size_t n = 0;
  for (auto name : special::kNames) {
    ++n;
    if (!std::getline(in, line) || line != name)
      throw DataError("vocabulary line " + std::to_string(n) + ": expected special '" +
                      std::string(name) + "'");
  }
  std::map<std::string, TokenId> by_bytes;
  for (std::size_t id = kByteBase; id < v.tokens_.size(); ++id)
    by_bytes.emplace(v.tokens_[id], static_cast<TokenId>(id));
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos)
      throw DataError("vocabulary line " + std::to_string(n) + ": expected two tokens");
    const auto l = from_hex(std::string_view(line).substr(0, sp), n);
    const auto r = from_hex(std::string_view(line).substr(sp + 1), n);
    auto li = by_bytes.find(l), ri = by_bytes.find(r);
    if (li == by_bytes.end() || ri == by_bytes.end())
      throw DataError("vocabulary line " + std::to_string(n) + ": merge of unknown token");
    const auto id = v.add_merge(li->second, ri->second);
    by_bytes.emplace(v.tokens_[id], id);
  }
  return v;
}

Vocabulary Vocabulary::load_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read vocabulary " + path);
  return load(f);
}

Vocabulary train_bpe(std::span<const std::string> texts, std::size_t vocab_size) {
  if (vocab_size <= Vocabulary::kBaseSize)
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " leaves no room for merges (" +
                      std::to_string(Vocabulary::kBaseSize) + " ids are reserved)");
  std::map<std::string, std::size_t> chunk_freq;
  for (const auto& t : texts)
    for (auto c : chunk_text(t)) ++chunk_freq[std::string(c)];

  struct Word {
    std::vector<TokenId> symbols;
    std::size_t freq;
  };
  std::vector<Word> words;
  for (const auto& [chunk, f] : chunk_freq) {
    Word w{{}, f};
    for (unsigned char c : chunk) w.symbols.push_back(static_cast<TokenId>(Vocabulary::kByteBase + c));
    if (w.symbols.size() > 1) words.push_back(std::move(w));
  }

  Vocabulary vocab;
  while (vocab.size() < vocab_size) {
    std::map<std::pair<TokenId, TokenId>, std::size_t> counts;
    for (const auto& w : words)
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i)
        counts[{w.symbols[i], w.symbols[i + 1]}] += w.freq;
    if (counts.empty()) break;

    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) {
        best = it;
      } else if (it->second == best->second) {
        const auto key = [&vocab](const std::pair<TokenId, TokenId>& p) {
          return std::make_pair(vocab.token_text(p.first), vocab.token_text(p.second));
        };
        if (key(it->first) < key(best->first)) best = it;
      }
    }
    const auto [l, r] = best->first;
    const TokenId id = vocab.add_merge(l, r);
    for (auto& w : words) {
      auto& s = w.symbols;
      std::size_t out = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == l && s[i + 1] == r) {
          s[out++] = id;
          ++i;
        } else {
          s[out++] = s[i];
        }
      }
      s.resize(out);
    }
  }
  return vocab;
}

std::vector<std::string> subtokenize_name(std::string_view name) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  auto cls = [](unsigned char c) {
    if (std::isdigit(c)) return 0;
    if (std::isupper(c)) return 1;
    if (std::islower(c)) return 2;
    return 3;
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    const auto c = static_cast<unsigned char>(name[i]);
    const int k = cls(c);
    if (k == 3) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      const auto p = static_cast<unsigned char>(name[i - 1]);
      const int pk = cls(p);
      const bool next_lower =
          i + 1 < name.size() && cls(static_cast<unsigned char>(name[i + 1])) == 2;
      const bool boundary = (pk == 0) != (k == 0) ||           // letter/digit switch
                            (pk == 2 && k == 1) ||             // fooBar
                            (pk == 1 && k == 1 && next_lower); // HTTPServer
      if (boundary) flush();
    }
    cur.push_back(static_cast<char>(std::tolower(c)));
  }
  flush();
  return out;
}

}  // namespace advf
