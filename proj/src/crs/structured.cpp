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

#include "crsllm/crs/structured.hpp"

#include "crsllm/util/error.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::crs {

std::string render_frames(const std::vector<corpus::SemanticFrame>& frames) {
  std::vector<std::string> parts;
  for (const auto& f : frames) parts.push_back(f.value.empty() ? f.attribute + ":" : f.attribute + ": " + f.value);
  return text::join(parts, ";");
}

std::string render_attributes(const std::vector<std::string>& attributes) {
  return text::join(attributes, ";");
}

StructuredParse parse_structured_output(const std::string& raw, tasks::TaskKind kind) {
  if (kind != tasks::TaskKind::kUnderstanding && kind != tasks::TaskKind::kElicitation) {
    throw PreconditionError(std::string("no structured grammar for task '") + tasks::task_name(kind) + "'");
  }
  StructuredParse out;
  const std::string norm = text::normalize_punctuation(raw);
  for (const std::string& piece : text::split(norm, ";")) {
    const std::string seg = text::trim(piece);
    if (seg.empty()) continue;
    const auto colon = seg.find(':');
    if (kind == tasks::TaskKind::kUnderstanding) {
      if (colon == std::string::npos) {
        out.diagnostics.push_back("segment '" + seg + "' has no ':'");
        continue;
      }
      corpus::SemanticFrame f{text::trim(seg.substr(0, colon)), text::trim(seg.substr(colon + 1))};
      if (!text::has_word_character(f.attribute)) {
        out.diagnostics.push_back("segment '" + seg + "' has no attribute name");
        continue;
      }
      out.frames.push_back(std::move(f));
    } else {
      std::string attr = text::trim(colon == std::string::npos ? seg : seg.substr(0, colon));
      if (!text::has_word_character(attr)) {
        out.diagnostics.push_back("segment '" + seg + "' has no attribute name");
        continue;
      }
      out.attributes.push_back(std::move(attr));
    }
  }
  const bool empty = out.frames.empty() && out.attributes.empty();
  out.parse_ok = out.diagnostics.empty() && !(empty && !text::trim(norm).empty());
  return out;
}

}  // namespace crsllm::crs
