// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "textgrpo/policy/policy.hpp"
#include "textgrpo/tasks/task_synth.hpp"

namespace textgrpo::tasks {

// Deterministic pseudo-policy that applies the data-generating rule: it plans
// the reference completion from the prompt and puts logit 50 on each planned
// token (then on EOS), zero elsewhere. Parameter-free; training entry points
// reject it. Used to validate the evaluation path end to end.
std::unique_ptr<policy::Policy> make_rule_policy(TaskId task, const GenParams& params,
                                                 const Vocabulary& vocab);

}  // namespace textgrpo::tasks
