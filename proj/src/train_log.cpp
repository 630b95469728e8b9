// SPDX-License-Identifier: Apache-2.0
#include "textgrpo/train/train_log.hpp"

#include <string>

#include "textgrpo/error.hpp"

namespace textgrpo::train {

namespace {

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::ordered_json StepRecord::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = "step";
  j["step"] = step;
  j["loss"] = loss;
  j["mean_reward"] = opt_json(mean_reward);
  j["mean_kl"] = opt_json(mean_kl);
  j["clip_fraction"] = opt_json(clip_fraction);
  j["truncated_refs"] = truncated_refs;
  j["wall_time_s"] = wall_time_s;
  return j;
}

StepRecord StepRecord::from_json(const nlohmann::json& j) {
  StepRecord r;
  r.step = j.at("step").get<int64_t>();
  r.loss = j.at("loss").get<double>();
  r.mean_reward = opt_from(j, "mean_reward");
  r.mean_kl = opt_from(j, "mean_kl");
  r.clip_fraction = opt_from(j, "clip_fraction");
  if (j.contains("truncated_refs")) r.truncated_refs = j.at("truncated_refs").get<int64_t>();
  if (j.contains("wall_time_s")) r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

TrainLogWriter::TrainLogWriter(const std::string& path) : out_(path) {
  if (!out_) throw Error(ErrorCategory::io, "cannot open train log for writing: " + path);
}

void TrainLogWriter::write_header(const nlohmann::ordered_json& header) {
  if (!enabled()) return;
  nlohmann::ordered_json j = header;
  j["type"] = "header";
  out_ << j.dump() << '\n';
  out_.flush();
}

void TrainLogWriter::write_step(const StepRecord& record) {
  if (!enabled()) return;
  out_ << record.to_json().dump() << '\n';
  out_.flush();
}

TrainLog read_train_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open train log: " + path);
  TrainLog log;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCategory::data,
                  path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    const std::string type = j.value("type", "step");
    try {
      if (type == "header") {
        log.header = j;
      } else if (type == "step") {
        log.steps.push_back(StepRecord::from_json(j));
      } else {
        throw Error(ErrorCategory::data,
                    path + ":" + std::to_string(lineno) + ": unknown record type " + type);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCategory::data,
                  path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
    }
  }
  return log;
}

}  // namespace textgrpo::train
