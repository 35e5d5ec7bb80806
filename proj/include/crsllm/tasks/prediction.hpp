/*
 * Copyright 2026 The crsllm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"
#include "crsllm/tasks/task.hpp"
#include "json.hpp"

namespace crsllm::tasks {

struct ScoredProduct {
  std::string product_id;
  double probability = 0.0;

  bool operator==(const ScoredProduct&) const = default;
};

// Sorted by probability descending, then product_id ascending.
std::vector<ScoredProduct> rank(std::vector<ScoredProduct> scores);

// Output of either system on one task instance.
struct Prediction {
  TaskKind kind = TaskKind::kUnderstanding;
  std::string instance_key;

  std::vector<corpus::SemanticFrame> frames;  // understanding
  std::vector<std::string> attributes;        // elicitation
  std::optional<char> letter;                 // recommendation, single-choice systems
  std::optional<std::string> product_id;      // recommendation, top choice
  std::vector<ScoredProduct> ranking;         // recommendation, scoring systems (ranked)
  std::string response;                       // generation

  std::string raw_text;
  bool parse_ok = true;
  std::vector<std::string> diagnostics;

  bool operator==(const Prediction&) const = default;
};

// Gold output of an instance expressed as a prediction.
Prediction gold_prediction(const TaskInstance& instance);

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

}  // namespace crsllm::tasks
