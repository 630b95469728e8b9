// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace textgrpo::train {

// One record per optimizer step. For GRPO, mean_reward averages the on-policy
// members only (the injected reference in mixed mode is excluded so the series
// tracks what the policy itself produces); mean_kl is the token mean of the k3
// estimate over every member; clip_fraction counts on-policy tokens whose
// selected objective branch was the clipped constant. SFT fills only loss.
struct StepRecord {
  int64_t step = 0;
  double loss = 0.0;
  std::optional<double> mean_reward;
  std::optional<double> mean_kl;
  std::optional<double> clip_fraction;
  int64_t truncated_refs = 0;  // mixed mode: references cut to the completion cap
  double wall_time_s = 0.0;

  nlohmann::ordered_json to_json() const;
  static StepRecord from_json(const nlohmann::json& j);
};

// Line-oriented JSON log. The first line is a header object carrying the run
// kind plus config/vocab digests; every later line is a step record.
class TrainLogWriter {
 public:
  TrainLogWriter() = default;  // disabled sink; write calls are no-ops
  explicit TrainLogWriter(const std::string& path);

  bool enabled() const { return out_.is_open(); }
  void write_header(const nlohmann::ordered_json& header);
  void write_step(const StepRecord& record);

 private:
  std::ofstream out_;
};

struct TrainLog {
  nlohmann::json header;
  std::vector<StepRecord> steps;
};

TrainLog read_train_log(const std::string& path);  // throws Error(io|data)

}  // namespace textgrpo::train
