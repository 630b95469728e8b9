// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/policy/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "textgrpo/error.hpp"
#include "textgrpo/policy/neural_policy.hpp"
#include "textgrpo/policy/tabular_policy.hpp"

namespace textgrpo::policy {

namespace {

constexpr char kMagic[8] = {'T', 'G', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::ostream& out, uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
  return x;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const uint64_t n = get_u64(in);
  if (n > (1ull << 30)) {
    throw Error(ErrorCategory::io, "checkpoint string length implausible");
  }
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

void put_doubles(std::ostream& out, const std::vector<double>& xs) {
  put_u64(out, xs.size());
  for (double x : xs) put_u64(out, std::bit_cast<uint64_t>(x));
}

std::vector<double> get_doubles(std::istream& in) {
  const uint64_t n = get_u64(in);
  if (n > (1ull << 28)) {
    throw Error(ErrorCategory::io, "checkpoint array length implausible");
  }
  std::vector<double> xs(n);
  for (uint64_t i = 0; i < n; ++i) xs[i] = std::bit_cast<double>(get_u64(in));
  return xs;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCategory::io, "cannot open for write: " + path.string());
  }
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, ckpt.vocab_words.size());
  for (const auto& w : ckpt.vocab_words) put_string(out, w);
  put_string(out, ckpt.descriptor);
  put_string(out, ckpt.config_digest);
  put_string(out, ckpt.vocab_digest);
  put_doubles(out, ckpt.theta);
  put_u64(out, ckpt.optimizer.has_value() ? 1 : 0);
  if (ckpt.optimizer) {
    put_u64(out, ckpt.optimizer->step_count);
    put_doubles(out, ckpt.optimizer->m);
    put_doubles(out, ckpt.optimizer->v);
  }
  if (!out) {
    throw Error(ErrorCategory::io, "checkpoint write failed: " + path.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCategory::io, "cannot open checkpoint: " + path.string());
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCategory::io, "not a checkpoint file: " + path.string());
  }
  Checkpoint ckpt;
  const uint64_t words = get_u64(in);
  if (words > (1ull << 24)) {
    throw Error(ErrorCategory::io, "checkpoint vocabulary implausible");
  }
  ckpt.vocab_words.reserve(words);
  for (uint64_t i = 0; i < words; ++i) ckpt.vocab_words.push_back(get_string(in));
  ckpt.descriptor = get_string(in);
  ckpt.config_digest = get_string(in);
  ckpt.vocab_digest = get_string(in);
  ckpt.theta = get_doubles(in);
  if (get_u64(in) == 1) {
    OptimizerSnapshot opt;
    opt.step_count = get_u64(in);
    opt.m = get_doubles(in);
    opt.v = get_doubles(in);
    ckpt.optimizer = std::move(opt);
  }
  if (!in) {
    throw Error(ErrorCategory::io, "checkpoint truncated: " + path.string());
  }
  return ckpt;
}

Checkpoint snapshot_policy(const Policy& policy,
                           const std::string& config_digest,
                           const AdamW* optimizer) {
  Checkpoint ckpt;
  ckpt.vocab_words = policy.vocab().content_words();
  ckpt.descriptor = policy.descriptor();
  ckpt.config_digest = config_digest;
  ckpt.vocab_digest = policy.vocab().digest();
  auto p = policy.params();
  ckpt.theta.assign(p.begin(), p.end());
  if (optimizer != nullptr) {
    OptimizerSnapshot opt;
    opt.step_count = optimizer->step_count();
    opt.m.assign(optimizer->first_moment().begin(),
                 optimizer->first_moment().end());
    opt.v.assign(optimizer->second_moment().begin(),
                 optimizer->second_moment().end());
    ckpt.optimizer = std::move(opt);
  }
  return ckpt;
}

std::unique_ptr<Policy> restore_policy(const Checkpoint& ckpt) {
  Vocabulary vocab(ckpt.vocab_words);
  std::unique_ptr<Policy> policy;
  int a = 0, b = 0;
  if (std::sscanf(ckpt.descriptor.c_str(), "rnn hidden=%d embed=%d", &a, &b) ==
      2) {
    policy = std::make_unique<NeuralPolicy>(vocab, a, b);
  } else if (std::sscanf(ckpt.descriptor.c_str(), "tabular order=%d", &a) == 1) {
    policy = std::make_unique<TabularPolicy>(vocab, a);
  } else {
    throw Error(ErrorCategory::io,
                "unknown architecture descriptor: " + ckpt.descriptor);
  }
  auto params = policy->params();
  if (params.size() != ckpt.theta.size()) {
    throw Error(ErrorCategory::mismatch,
                "checkpoint parameter count mismatch for " + ckpt.descriptor);
  }
  std::copy(ckpt.theta.begin(), ckpt.theta.end(), params.begin());
  return policy;
}

}  // namespace textgrpo::policy
