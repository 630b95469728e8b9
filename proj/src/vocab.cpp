// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/vocab.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "textgrpo/error.hpp"

namespace textgrpo {

namespace {
const std::string kReservedNames[Vocabulary::kReserved] = {"<pad>", "<bos>",
                                                           "<eos>", "<unk>"};
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_.reserve(words.size() + kReserved);
  for (int i = 0; i < kReserved; ++i) words_.push_back(kReservedNames[i]);
  for (const auto& w : words) {
    if (w.empty()) {
      throw Error(ErrorCategory::config, "vocabulary word must be nonempty");
    }
    words_.push_back(w);
  }
  for (size_t i = 0; i < words_.size(); ++i) {
    auto [it, inserted] = index_.emplace(words_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(ErrorCategory::config, "duplicate vocabulary word: " + words_[i]);
    }
  }
}

Vocabulary Vocabulary::from_texts(const std::vector<std::string>& texts) {
  std::set<std::string> seen;
  for (const auto& text : texts) {
    std::istringstream in(text);
    std::string w;
    while (in >> w) seen.insert(w);
  }
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

TokenId Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
  return index_.count(word) != 0;
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw Error(ErrorCategory::data,
                "token id out of range: " + std::to_string(id));
  }
  return words_[static_cast<size_t>(id)];
}

std::string Vocabulary::digest() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= 0x1f;
    h *= 0x100000001b3ull;
  };
  for (const auto& w : words_) feed(w);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::vector<std::string> Vocabulary::content_words() const {
  return std::vector<std::string>(words_.begin() + kReserved, words_.end());
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab) {
  TokenSequence out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(vocab.id(w));
  return out;
}

TokenSequence strip_trailing_eos(const TokenSequence& tokens) {
  TokenSequence out = tokens;
  if (!out.empty() && out.back() == Vocabulary::kEos) out.pop_back();
  return out;
}

std::string detokenize(const TokenSequence& tokens, const Vocabulary& vocab) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.word(tokens[i]);
  }
  return out;
}

}  // namespace textgrpo
