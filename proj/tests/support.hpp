// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the test binaries.
#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "advf/corpus.hpp"
#include "advf/model.hpp"
#include "advf/tokenizer.hpp"
#include "advf/trainer.hpp"

namespace advf::testing {

inline ModelConfig small_config(std::size_t vocab) {
  ModelConfig c;
  c.n_layers = 2;
  c.hidden = 16;
  c.n_heads = 2;
  c.ff_dim = 32;
  c.vocab = vocab;
  c.max_len = 48;
  c.n_decoder_layers = 1;
  c.adapter_dim = 4;
  c.lora_rank = 2;
  return c;
}

struct Synthetic {
  Corpus corpus;
  Vocabulary vocab;
  std::vector<std::string> langs;

  std::vector<Seq2SeqExample> examples(Split s, Task task, std::size_t max_len) const {
    return prepare_examples(corpus, corpus.split(s), vocab, task, max_len);
  }

  std::vector<std::vector<TokenId>> code_of(const std::string& lang, Split s) const {
    std::vector<std::vector<TokenId>> out;
    for (auto i : corpus.select(s, lang)) out.push_back(vocab.encode(corpus.examples[i].code));
    return out;
  }
};

inline Synthetic make_synthetic(std::vector<std::size_t> counts, std::uint64_t seed,
                                std::size_t vocab_size = 600) {
  Synthetic s;
  const std::vector<double> ratios{0.8, 0.1, 0.1};
  s.corpus = split(gen_synthetic(counts.size(), counts, seed), ratios, seed);
  std::vector<std::string> texts;
  for (auto i : s.corpus.train) {
    texts.push_back(s.corpus.examples[i].code);
    texts.push_back(s.corpus.examples[i].doc);
  }
  s.vocab = train_bpe(texts, vocab_size);
  s.langs = s.corpus.languages();
  return s;
}

template <typename T>
bool same_values(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.values().data(), b.values().data(), a.numel() * sizeof(T)) == 0;
}

template <typename T>
bool same_params(const TransformerModel<T>& a, const TransformerModel<T>& b) {
  const auto& ea = a.params().entries();
  const auto& eb = b.params().entries();
  if (ea.size() != eb.size()) return false;
  for (std::size_t i = 0; i < ea.size(); ++i)
    if (ea[i].name != eb[i].name || !same_values(ea[i].tensor, eb[i].tensor)) return false;
  return true;
}

}  // namespace advf::testing
