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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"
#include "json.hpp"

namespace crsllm::tasks {

enum class TaskKind { kUnderstanding, kElicitation, kRecommendation, kGeneration };

inline constexpr TaskKind kAllTasks[] = {TaskKind::kUnderstanding, TaskKind::kElicitation,
                                         TaskKind::kRecommendation, TaskKind::kGeneration};

const char* task_name(TaskKind kind);
std::optional<TaskKind> parse_task(const std::string& name);

inline constexpr std::size_t kMaxCandidates = 20;

// Letter for candidate position `i` (0 -> 'A').
char candidate_letter(std::size_t i);
// Position of a letter among A..T, or nullopt.
std::optional<std::size_t> letter_position(char letter);

struct Candidate {
  char label = 'A';
  corpus::Product product;

  bool operator==(const Candidate&) const = default;
};

struct TaskInstance {
  TaskKind kind = TaskKind::kUnderstanding;
  std::string dialogue_id;
  std::string category;
  int cut_index = 0;
  // Disambiguates several recommendation instances at the same cut.
  int sub_index = 0;
  std::vector<corpus::DialogueTurn> context;   // turns strictly before cut_index
  std::optional<corpus::DialogueTurn> current;  // understanding only

  std::vector<corpus::SemanticFrame> gold_frames;  // understanding
  std::vector<std::string> gold_attributes;        // elicitation
  std::optional<std::string> gold_product;         // recommendation
  std::optional<std::string> gold_response;        // generation

  // Generation inputs taken from the labelled system turn.
  std::vector<std::string> given_attributes;
  std::vector<std::string> given_products;

  std::vector<Candidate> candidates;  // recommendation only
  std::vector<std::string> behaviors;

  // Stable identifier "<dialogue_id>#<cut>#<kind>[#<sub>]".
  std::string key() const;

  // Frames acquired from user turns in the context, in order.
  std::vector<corpus::SemanticFrame> acquired_needs() const;

  bool operator==(const TaskInstance&) const = default;
};

std::vector<TaskInstance> extract_task_instances(const corpus::Dialogue& d, TaskKind kind);

// Candidate set of 20 letter-labelled products containing the gold product
// once, at a uniformly random position. The seed is combined with the
// instance key, so the result does not depend on call order. Throws
// PreconditionError when the catalog holds fewer than 20 products or the
// gold product is missing from it.
TaskInstance sample_candidates(const TaskInstance& instance, const corpus::Catalog& catalog,
                               std::uint64_t seed);

// Product id behind a candidate letter, if the letter is in use.
std::optional<std::string> resolve_letter(const TaskInstance& instance, char letter);
std::optional<char> letter_of(const TaskInstance& instance, const std::string& product_id);

nlohmann::json to_json(const TaskInstance& instance);
TaskInstance instance_from_json(const nlohmann::json& j);

}  // namespace crsllm::tasks
