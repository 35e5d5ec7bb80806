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

#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"
#include "crsllm/tasks/task.hpp"

namespace crsllm::crs {

// Structured text form shared by CRS targets and LLM outputs:
//   frames      "attr: value;attr: value"   ("attr:" when the value is empty)
//   attributes  "attr;attr"
std::string render_frames(const std::vector<corpus::SemanticFrame>& frames);
std::string render_attributes(const std::vector<std::string>& attributes);

struct StructuredParse {
  std::vector<corpus::SemanticFrame> frames;  // understanding
  std::vector<std::string> attributes;        // elicitation
  std::vector<std::string> diagnostics;       // one entry per dropped segment
  bool parse_ok = true;
};

// Lenient parser. Splits on ';' and then on the first ':'; empty segments are
// skipped, malformed ones dropped with a diagnostic. For elicitation a
// segment's text before ':' (or the whole segment) is the attribute name.
// parse_ok is false when a segment was dropped or non-blank text yielded
// nothing. Throws PreconditionError for recommendation and generation.
StructuredParse parse_structured_output(const std::string& text, tasks::TaskKind kind);

}  // namespace crsllm::crs
