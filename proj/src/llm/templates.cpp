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

#include "crsllm/llm/templates.hpp"

#include "crsllm/templates_resource.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::llm {

using Json = nlohmann::json;

const char* language_name(Language language) { return language == Language::kZh ? "zh" : "en"; }

std::optional<Language> parse_language(const std::string& name) {
  if (name == "en") return Language::kEn;
  if (name == "zh") return Language::kZh;
  return std::nullopt;
}

std::string TemplateSet::category_label(const std::string& category_name) const {
  auto it = category_names.find(category_name);
  return it == category_names.end() ? category_name : it->second;
}

std::string TemplateSet::instruction(tasks::TaskKind kind, const std::string& category_name) const {
  return text::substitute(instructions.at(kind), "category", category_label(category_name));
}

namespace {

std::string required(const Json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw FormatError("instruction_templates.json", 0, std::string("missing string '") + key + "'");
  }
  return obj.at(key).get<std::string>();
}

}  // namespace

TemplateSet parse_templates(const Json& resource, Language language) {
  const std::string lang = language_name(language);
  TemplateSet t;
  t.version = required(resource, "version");
  t.language = language;
  const Json& l = resource.at("languages").at(lang);
  for (tasks::TaskKind k : tasks::kAllTasks) t.instructions[k] = required(l.at("instructions"), tasks::task_name(k));
  const Json& s = l.at("sections");
  t.sections = {required(s, "dialogue"),         required(s, "current_input"),
                required(s, "candidates"),       required(s, "acquired_needs"),
                required(s, "guiding_attributes"), required(s, "recommended_products"),
                required(s, "role_user"),        required(s, "role_system"),
                required(s, "candidate_owner"),  required(s, "candidate_pair"),
                required(s, "candidate_joiner"), required(s, "frame_colon"),
                required(s, "none")};
  for (const auto& [k, v] : l.at("categories").items()) t.category_names[k] = v.get<std::string>();
  const Json& a = resource.at("crs_assist").at(lang);
  t.crs_assist = {required(a, "advisory"), required(a, "result"), required(a, "ranking"), required(a, "no_result")};
  return t;
}

const Json& builtin_template_resource() {
  static const Json resource = Json::parse(resource::kInstructionTemplatesJson);
  return resource;
}

const TemplateSet& builtin_templates(Language language) {
  static const TemplateSet en = parse_templates(builtin_template_resource(), Language::kEn);
  static const TemplateSet zh = parse_templates(builtin_template_resource(), Language::kZh);
  return language == Language::kZh ? zh : en;
}

}  // namespace crsllm::llm
