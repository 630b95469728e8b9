// SPDX-License-Identifier: Apache-2.0
#pragma once

// Versioned binary checkpoint: vocabulary, architecture descriptor, flat
// parameters and (optionally) optimizer state. Parameters round-trip
// bit-exactly; all integers and doubles are stored little-endian.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "textgrpo/policy/adamw.hpp"
#include "textgrpo/policy/policy.hpp"

namespace textgrpo::policy {

struct OptimizerSnapshot {
  uint64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
};

struct Checkpoint {
  std::vector<std::string> vocab_words;  // content words, ids 4..
  std::string descriptor;                // e.g. "rnn hidden=64 embed=64"
  std::string config_digest;
  std::string vocab_digest;
  std::vector<double> theta;
  std::optional<OptimizerSnapshot> optimizer;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Capture / restore helpers working directly on policies.
Checkpoint snapshot_policy(const Policy& policy, const std::string& config_digest,
                           const AdamW* optimizer = nullptr);

// Rebuilds the policy named by the descriptor ("rnn ..." or "tabular ...").
std::unique_ptr<Policy> restore_policy(const Checkpoint& ckpt);

}  // namespace textgrpo::policy
