// SPDX-License-Identifier: Apache-2.0
#include "textgrpo/tasks/rule_policy.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "textgrpo/error.hpp"

namespace textgrpo::tasks {

namespace {

// Tokens of the source utterance: everything after the last ":" marker.
TokenSequence after_last_colon(const TokenSequence& prompt, TokenId colon) {
  auto it = std::find(prompt.rbegin(), prompt.rend(), colon);
  if (it == prompt.rend()) return {};
  return TokenSequence(it.base(), prompt.end());
}

class RulePolicy;

class RuleDecoder : public policy::PolicyDecoder {
 public:
  explicit RuleDecoder(const RulePolicy& owner) : owner_(owner) {}
  void reset(const TokenSequence& prompt) override;
  void next_logits(std::vector<double>& out) const override;
  void push(TokenId) override { ++pos_; }

 private:
  const RulePolicy& owner_;
  TokenSequence plan_;
  size_t pos_ = 0;
};

class RulePolicy : public policy::Policy {
 public:
  RulePolicy(TaskId task, const GenParams& params, const Vocabulary& vocab)
      : task_(task), params_(params), vocab_(vocab) {
    const std::vector<std::string> words = cipher_word_list(params.vocab_size);
    const std::vector<int> sub =
        cipher_substitution(params.seed, params.vocab_size, params.identity_substitution);
    for (size_t i = 0; i < words.size(); ++i) {
      const TokenId from = vocab_.id(words[i]);
      const TokenId to = vocab_.id(words[size_t(sub[i])]);
      if (from != Vocabulary::kUnk) substitution_[from] = to;
    }
    colon_ = vocab_.id(":");
    is_ = vocab_.id("is");
    dot_ = vocab_.id(".");
    question_ = vocab_.id("question");
    it_ = vocab_.id("it");
    unknown_ = vocab_.id("unknown");
  }

  const Vocabulary& vocab() const override { return vocab_; }
  std::span<double> params() override { return {}; }
  std::span<const double> params() const override { return {}; }
  std::string descriptor() const override {
    return std::string("rule task=") + task_name(task_);
  }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<RulePolicy>(task_, params_, vocab_);
  }
  std::unique_ptr<policy::PolicyDecoder> make_decoder() const override {
    return std::make_unique<RuleDecoder>(*this);
  }
  void add_grad_weighted_logprob(const TokenSequence&, const TokenSequence&,
                                 std::span<const double>, std::span<double>) const override {
    throw Error(ErrorCategory::config, "rule policy has no parameters to differentiate");
  }

  TokenSequence plan(const TokenSequence& prompt) const {
    switch (task_) {
      case TaskId::cipher: {
        TokenSequence src = after_last_colon(prompt, colon_);
        for (TokenId& t : src) {
          const auto it = substitution_.find(t);
          if (it != substitution_.end()) t = it->second;
        }
        return src;
      }
      case TaskId::reverse: {
        TokenSequence src = after_last_colon(prompt, colon_);
        std::reverse(src.begin(), src.end());
        return src;
      }
      case TaskId::copyqa: return plan_copyqa(prompt);
    }
    return {};
  }

 private:
  TokenSequence plan_copyqa(const TokenSequence& prompt) const {
    if (prompt.empty()) return {};
    const TokenId key = prompt.back();
    // Facts precede the "question" marker as "<key> is <value...> ." runs.
    size_t facts_end = prompt.size();
    const auto q = std::find(prompt.begin(), prompt.end(), question_);
    if (q != prompt.end()) facts_end = size_t(q - prompt.begin());
    for (size_t i = 0; i + 1 < facts_end; ++i) {
      if (prompt[i] == key && prompt[i + 1] == is_) {
        TokenSequence value;
        for (size_t j = i + 2; j < facts_end && prompt[j] != dot_; ++j) {
          value.push_back(prompt[j]);
        }
        return value;
      }
    }
    return {it_, is_, unknown_};
  }

  TaskId task_;
  GenParams params_;
  Vocabulary vocab_;
  std::unordered_map<TokenId, TokenId> substitution_;
  TokenId colon_, is_, dot_, question_, it_, unknown_;
};

void RuleDecoder::reset(const TokenSequence& prompt) {
  plan_ = owner_.plan(prompt);
  pos_ = 0;
}

void RuleDecoder::next_logits(std::vector<double>& out) const {
  out.assign(size_t(owner_.vocab().size()), 0.0);
  const TokenId target = pos_ < plan_.size() ? plan_[pos_] : Vocabulary::kEos;
  out[size_t(target)] = 50.0;
}

}  // namespace

std::unique_ptr<policy::Policy> make_rule_policy(TaskId task, const GenParams& params,
                                                 const Vocabulary& vocab) {
  return std::make_unique<RulePolicy>(task, params, vocab);
}

}  // namespace textgrpo::tasks
