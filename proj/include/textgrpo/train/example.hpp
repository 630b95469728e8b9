// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "textgrpo/vocab.hpp"

namespace textgrpo::train {

// Tokenized (prompt, reference) pair. References carry no EOS; trainers append
// one where a policy-shaped sequence is needed.
struct TrainExample {
  TokenSequence prompt;
  TokenSequence reference;
};

}  // namespace textgrpo::train
