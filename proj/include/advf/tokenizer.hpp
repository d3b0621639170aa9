// SPDX-License-Identifier: Apache-2.0
//
// Byte-level BPE. Ids 0-5 are the reserved specials, ids 6..261 the 256 raw
// bytes, and every later id one merge in training order. Text is first cut
// into chunks (an optional single leading space plus an identifier run, or a
// single other byte) and merges never cross chunk boundaries, so decoding is
// plain byte concatenation.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advf/tensor.hpp"

namespace advf {

class Vocabulary {
 public:
  static constexpr std::size_t kByteBase = 6;
  static constexpr std::size_t kBaseSize = kByteBase + 256;

  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::pair<TokenId, TokenId>>& merges() const { return merges_; }

  std::vector<TokenId> encode(std::string_view text) const;
  /// Specials are dropped unless `keep_specials`, in which case their names
  /// are emitted.
  std::string decode(std::span<const TokenId> ids, bool keep_specials = false) const;
  /// Raw bytes of a token, or the special's name.
  std::string token_text(TokenId id) const;

  /// Six special names, then one merge per line as two hex-encoded tokens.
  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static Vocabulary load(std::istream& in);
  static Vocabulary load_file(const std::string& path);

  /// Appends a merge of two existing tokens and returns the new id.
  TokenId add_merge(TokenId left, TokenId right);

  bool operator==(const Vocabulary& o) const { return merges_ == o.merges_; }

 private:
  std::vector<std::string> tokens_;  // bytes per id; specials hold their names
  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::map<std::pair<TokenId, TokenId>, std::size_t> rank_;
};

/// Greedy BPE: repeatedly merges the most frequent adjacent pair, ties going
/// to the pair whose (left bytes, right bytes) is lexicographically smaller.
/// Throws ConfigError when `vocab_size` leaves no room beyond specials and
/// the byte alphabet.
Vocabulary train_bpe(std::span<const std::string> texts, std::size_t vocab_size);

/// Pre-tokenisation chunks; concatenating them yields `text`.
std::vector<std::string_view> chunk_text(std::string_view text);

/// Lowercased identifier subtokens: split on non-alphanumerics, camelCase
/// boundaries, acronym ends and letter/digit transitions.
std::vector<std::string> subtokenize_name(std::string_view name);

}  // namespace advf
