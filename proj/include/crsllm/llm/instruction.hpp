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

#include <filesystem>
#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"
#include "crsllm/llm/templates.hpp"
#include "crsllm/tasks/prediction.hpp"
#include "crsllm/tasks/task.hpp"
#include "json.hpp"

namespace crsllm::llm {

// One instruction-tuning record plus the routing metadata around it.
struct InstructionSample {
  std::string instruction;
  std::string input;
  std::string output;

  tasks::TaskKind kind = tasks::TaskKind::kUnderstanding;
  std::string category;
  std::string dialogue_id;
  int cut_index = 0;
  int sub_index = 0;
  std::vector<std::string> candidates;  // product ids in letter order (recommendation)
  Language language = Language::kEn;
  std::string template_version;

  std::string key() const;  // same form as TaskInstance::key()
  bool operator==(const InstructionSample&) const = default;
};

// Deterministic. Throws PreconditionError when a recommendation instance has
// more than 20 candidates or when the gold output is missing or empty.
InstructionSample build_instruction_sample(const tasks::TaskInstance& instance, const corpus::Category& category,
                                           Language language = Language::kEn);

// Candidate line for one product: "A's color is red, size is small".
// Attributes follow the category schema order.
std::string render_candidate(char letter, const corpus::Product& product, const corpus::Category& category,
                             const TemplateSet& templates);

// Lenient reader for model text.
//   understanding/elicitation  shared structured grammar
//   recommendation             a bare label, else the first standalone
//                              label letter (the pronoun "I" is skipped)
//   generation                 trimmed text, parse_ok iff non-empty
// `candidates` are product ids in letter order; a letter outside them
// leaves parse_ok=false.
tasks::Prediction parse_llm_output(const std::string& raw, tasks::TaskKind kind,
                                   const std::vector<std::string>& candidates = {});

// Instruction files hold exactly {instruction, input, output} per line.
nlohmann::json to_record(const InstructionSample& sample);
void write_instruction_file(const std::filesystem::path& path, const std::vector<InstructionSample>& samples);
// Throws FormatError(path, line, ...) on a record with other keys.
std::vector<InstructionSample> read_instruction_file(const std::filesystem::path& path);

// Full form, metadata included.
nlohmann::json to_json(const InstructionSample& sample);
InstructionSample sample_from_json(const nlohmann::json& j);

}  // namespace crsllm::llm
