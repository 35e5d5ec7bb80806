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

namespace crsllm::crs {

enum class SpecialToken { kUser, kSystem, kUnderstand, kElicit, kRecommend, kLlm };

const char* surface(SpecialToken token);

// "[user]", "[system]", "[understand]", "[elicit]", "[recommend]", "[LLM]".
// Checkpoints store this list and refuse to load under a different one.
const std::vector<std::string>& special_token_list();

enum class PromptVariant { kXU, kXS, kXA, kXR, kXG };

const char* variant_name(PromptVariant v);
std::optional<PromptVariant> parse_variant(const std::string& name);

struct PromptSequence {
  PromptVariant variant = PromptVariant::kXU;
  std::string text;
  std::string task_prompt;  // empty for X_R

  bool operator==(const PromptSequence&) const = default;
};

// Throws PreconditionError for recommendation. Understanding on a system
// utterance (X_S) reuses the understanding prompt.
std::string make_task_prompt(tasks::TaskKind kind);

// X_U/X_S by the role of the current turn for understanding; X_A, X_R, X_G
// for the other kinds.
PromptVariant default_variant(const tasks::TaskInstance& instance);

// Context turns only:
//   "[user] u [understand] a: v" ... with "[elicit] a" (X_A) or
//   "[recommend] p" (X_R) placed immediately before the labelled system turn.
std::string render_turns(const std::vector<corpus::DialogueTurn>& turns, PromptVariant variant);

// Throws PreconditionError when the variant does not fit the instance kind
// (or, for X_U/X_S, the role of the current turn).
PromptSequence serialize_context(const tasks::TaskInstance& instance, PromptVariant variant);
PromptSequence serialize_context(const tasks::TaskInstance& instance);

struct ParsedTurn {
  corpus::Role role = corpus::Role::kUser;
  std::string text;
  std::vector<corpus::SemanticFrame> frames;
  std::vector<std::string> elicit;
  std::vector<std::string> recommend;

  bool operator==(const ParsedTurn&) const = default;
};

struct ParsedPrompt {
  std::vector<ParsedTurn> turns;
  std::vector<std::string> tail_elicit;     // X_G
  std::vector<std::string> tail_recommend;  // X_G
  std::optional<std::string> llm_segment;

  bool operator==(const ParsedPrompt&) const = default;
};

// Inverse of the serializer. Throws FormatError on text the grammar cannot
// produce.
ParsedPrompt parse_prompt(const std::string& text);

// The prompt text without a trailing "[LLM]" segment.
std::string strip_llm_segment(const std::string& text);

}  // namespace crsllm::crs
