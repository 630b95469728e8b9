// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace textgrpo {

using TokenId = int32_t;

// Ordered list of vocabulary symbol ids. The unit every metric, policy and
// trainer consumes.
using TokenSequence = std::vector<TokenId>;

// Symbol table with four reserved ids. Content words start at id 4 and keep
// the order they were supplied in; builders sort them so the table is a pure
// function of the word set.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr int32_t kReserved = 4;

  // words: distinct content symbols, already in their final order.
  explicit Vocabulary(const std::vector<std::string>& words);

  // Collects every whitespace token of the given texts, dedupes and sorts.
  static Vocabulary from_texts(const std::vector<std::string>& texts);

  int32_t size() const { return static_cast<int32_t>(words_.size()); }

  // Returns kUnk for unknown words.
  TokenId id(const std::string& word) const;

  bool contains(const std::string& word) const;

  const std::string& word(TokenId id) const;

  bool is_reserved(TokenId id) const { return id >= 0 && id < kReserved; }

  // FNV-1a over the symbol table; used to pair checkpoints with datasets.
  std::string digest() const;

  const std::vector<std::string>& symbols() const { return words_; }

  // Content words only (ids >= kReserved), for serialization.
  std::vector<std::string> content_words() const;

  bool operator==(const Vocabulary& other) const {
    return words_ == other.words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

// Whitespace-delimited tokenization through the vocabulary; unknown words map
// to kUnk. Deterministic, no normalization.
TokenSequence tokenize(const std::string& text, const Vocabulary& vocab);

// Copy without one trailing EOS, if present. Scoring compares content tokens
// only, so generated completions pass through this first.
TokenSequence strip_trailing_eos(const TokenSequence& tokens);

// Inverse of tokenize for in-vocabulary ids; reserved ids render as their
// angle-bracket names.
std::string detokenize(const TokenSequence& tokens, const Vocabulary& vocab);

}  // namespace textgrpo
