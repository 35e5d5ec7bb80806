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

#include <map>
#include <optional>
#include <string>

#include "crsllm/tasks/task.hpp"
#include "json.hpp"

namespace crsllm::llm {

enum class Language { kEn, kZh };

const char* language_name(Language language);
std::optional<Language> parse_language(const std::string& name);

// Fixed strings used to flatten a task instance into an instruction input.
struct InputSections {
  std::string dialogue;
  std::string current_input;
  std::string candidates;
  std::string acquired_needs;
  std::string guiding_attributes;
  std::string recommended_products;
  std::string role_user;
  std::string role_system;
  std::string candidate_owner;   // "{letter}'s "
  std::string candidate_pair;    // "{attribute} is {value}"
  std::string candidate_joiner;
  std::string frame_colon;
  std::string none;
};

// Wording added when a CRS result is folded into an LLM sample.
struct CrsAssistStrings {
  std::string advisory;
  std::string result;
  std::string ranking;
  std::string no_result;
};

struct TemplateSet {
  std::string version;
  Language language = Language::kEn;
  std::map<tasks::TaskKind, std::string> instructions;  // contain "{category}"
  InputSections sections;
  std::map<std::string, std::string> category_names;  // English name -> localized
  CrsAssistStrings crs_assist;

  // Localized category label; unknown names pass through unchanged.
  std::string category_label(const std::string& category_name) const;
  std::string instruction(tasks::TaskKind kind, const std::string& category_name) const;
};

// Throws FormatError when a required key is missing.
TemplateSet parse_templates(const nlohmann::json& resource, Language language);

// Templates compiled into the library from resources/instruction_templates.json.
const TemplateSet& builtin_templates(Language language);
const nlohmann::json& builtin_template_resource();

}  // namespace crsllm::llm
