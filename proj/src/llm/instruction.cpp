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

#include "crsllm/llm/instruction.hpp"

#include <cctype>

#include "crsllm/corpus/io.hpp"
#include "crsllm/crs/structured.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/jsonl.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::llm {

using Json = nlohmann::json;
using tasks::TaskKind;

std::string InstructionSample::key() const {
  std::string k = dialogue_id + "#" + std::to_string(cut_index) + "#" + tasks::task_name(kind);
  if (sub_index != 0) k += "#" + std::to_string(sub_index);
  return k;
}

namespace {

std::string render_turn(const corpus::DialogueTurn& t, const InputSections& s) {
  return (t.role() == corpus::Role::kUser ? s.role_user : s.role_system) + t.utterance.text;
}

std::string render_context(const std::vector<corpus::DialogueTurn>& turns, const InputSections& s) {
  std::vector<std::string> parts;
  for (const auto& t : turns) parts.push_back(render_turn(t, s));
  return s.dialogue + text::join(parts, "[SEP]");
}

std::string render_frames_localized(const std::vector<corpus::SemanticFrame>& frames, const InputSections& s) {
  if (frames.empty()) return s.none;
  std::vector<std::string> parts;
  for (const auto& f : frames) parts.push_back(f.attribute + s.frame_colon + f.value);
  // An empty value leaves a trailing space after an ASCII colon.
  for (auto& p : parts) p = text::trim(p);
  return text::join(parts, ";");
}

std::string build_output(const tasks::TaskInstance& inst) {
  switch (inst.kind) {
    case TaskKind::kUnderstanding: return crs::render_frames(inst.gold_frames);
    case TaskKind::kElicitation: return crs::render_attributes(inst.gold_attributes);
    case TaskKind::kRecommendation: {
      if (!inst.gold_product) return "";
      auto letter = tasks::letter_of(inst, *inst.gold_product);
      if (!letter) throw PreconditionError(inst.key() + ": gold product is not among the candidates");
      return std::string(1, *letter);
    }
    case TaskKind::kGeneration: return inst.gold_response.value_or("");
  }
  return "";
}

}  // namespace

std::string render_candidate(char letter, const corpus::Product& product, const corpus::Category& category,
                             const TemplateSet& templates) {
  const InputSections& s = templates.sections;
  std::vector<std::string> pairs;
  auto pair = [&](const std::string& a, const std::string& v) {
    return text::substitute(text::substitute(s.candidate_pair, "attribute", a), "value", v);
  };
  for (const auto& spec : category.attribute_schema) {
    auto it = product.attributes.find(spec.name);
    if (it != product.attributes.end()) pairs.push_back(pair(it->first, it->second));
  }
  for (const auto& [a, v] : product.attributes) {
    if (!category.find_attribute(a)) pairs.push_back(pair(a, v));
  }
  const std::string owner = text::substitute(s.candidate_owner, "letter", std::string(1, letter));
  return owner + (pairs.empty() ? s.none : text::join(pairs, s.candidate_joiner));
}

InstructionSample build_instruction_sample(const tasks::TaskInstance& inst, const corpus::Category& category,
                                           Language language) {
  const TemplateSet& t = builtin_templates(language);
  const InputSections& s = t.sections;
  if (inst.candidates.size() > tasks::kMaxCandidates) {
    throw PreconditionError(inst.key() + ": more than 20 candidates");
  }
  InstructionSample out;
  out.kind = inst.kind;
  out.category = inst.category;
  out.dialogue_id = inst.dialogue_id;
  out.cut_index = inst.cut_index;
  out.sub_index = inst.sub_index;
  out.language = language;
  out.template_version = t.version;
  out.instruction = t.instruction(inst.kind, category.name);
  out.input = render_context(inst.context, s);

  switch (inst.kind) {
    case TaskKind::kUnderstanding:
      if (!inst.current) throw PreconditionError(inst.key() + ": understanding instance without a current turn");
      out.input += s.current_input + render_turn(*inst.current, s);
      break;
    case TaskKind::kElicitation: break;
    case TaskKind::kRecommendation: {
      if (inst.candidates.empty()) throw PreconditionError(inst.key() + ": recommendation needs candidates");
      std::vector<std::string> lines;
      for (const auto& c : inst.candidates) {
        lines.push_back(render_candidate(c.label, c.product, category, t));
        out.candidates.push_back(c.product.product_id);
      }
      out.input += s.candidates + text::join(lines, "[SEP]");
      break;
    }
    case TaskKind::kGeneration: {
      std::vector<corpus::SemanticFrame> guiding;
      for (const auto& a : inst.given_attributes) guiding.push_back({a, ""});
      out.input += s.acquired_needs + render_frames_localized(inst.acquired_needs(), s);
      out.input += s.guiding_attributes + render_frames_localized(guiding, s);
      if (!inst.given_products.empty()) out.input += s.recommended_products + text::join(inst.given_products, ";");
      break;
    }
  }
  out.output = build_output(inst);
  if (out.output.empty()) throw PreconditionError(inst.key() + ": missing gold output");
  return out;
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Position of the chosen label letter in `text`, or npos.
std::size_t find_label(const std::string& text, std::size_t n_labels) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const auto pos = tasks::letter_position(c);
    if (!pos || *pos >= n_labels) continue;
    if (i > 0 && is_alnum(text[i - 1])) continue;
    if (i + 1 < text.size() && is_alnum(text[i + 1])) continue;
    if (c == 'I' && i + 1 < text.size()) {
      const char next = text[i + 1];
      if (next == '\'') continue;
      if (next == ' ' && i + 2 < text.size() && std::islower(static_cast<unsigned char>(text[i + 2]))) continue;
    }
    return i;
  }
  return std::string::npos;
}

}  // namespace

tasks::Prediction parse_llm_output(const std::string& raw, TaskKind kind, const std::vector<std::string>& candidates) {
  tasks::Prediction p;
  p.kind = kind;
  p.raw_text = raw;
  switch (kind) {
    case TaskKind::kUnderstanding:
    case TaskKind::kElicitation: {
      crs::StructuredParse sp = crs::parse_structured_output(raw, kind);
      p.frames = std::move(sp.frames);
      p.attributes = std::move(sp.attributes);
      p.diagnostics = std::move(sp.diagnostics);
      p.parse_ok = sp.parse_ok;
      break;
    }
    case TaskKind::kGeneration:
      p.response = text::trim(raw);
      p.parse_ok = !p.response.empty();
      break;
    case TaskKind::kRecommendation: {
      const std::size_t n = candidates.empty() ? tasks::kMaxCandidates : candidates.size();
      const std::string t = text::trim(raw);
      std::size_t at = std::string::npos;
      if (t.size() == 1 && tasks::letter_position(t[0]) && *tasks::letter_position(t[0]) < n) {
        at = 0;
      } else {
        at = find_label(t, n);
      }
      if (at == std::string::npos) {
        p.parse_ok = false;
        p.diagnostics.push_back("no candidate letter in output");
        break;
      }
      p.letter = t[at];
      if (!candidates.empty()) p.product_id = candidates[*tasks::letter_position(t[at])];
      break;
    }
  }
  return p;
}

Json to_record(const InstructionSample& s) {
  return {{"instruction", s.instruction}, {"input", s.input}, {"output", s.output}};
}

void write_instruction_file(const std::filesystem::path& path, const std::vector<InstructionSample>& samples) {
  std::vector<Json> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(to_record(s));
  jsonl::write_all(path, rows);
}

std::vector<InstructionSample> read_instruction_file(const std::filesystem::path& path) {
  std::vector<InstructionSample> out;
  jsonl::for_each(path, [&](const Json& j, int line) {
    if (!j.is_object() || j.size() != 3 || !j.contains("instruction") || !j.contains("input") ||
        !j.contains("output")) {
      throw FormatError(path.string(), line, "record must have exactly instruction, input and output");
    }
    InstructionSample s;
    s.instruction = j.at("instruction").get<std::string>();
    s.input = j.at("input").get<std::string>();
    s.output = j.at("output").get<std::string>();
    out.push_back(std::move(s));
  });
  return out;
}

Json to_json(const InstructionSample& s) {
  Json j = to_record(s);
  j["kind"] = tasks::task_name(s.kind);
  j["category"] = s.category;
  j["dialogue_id"] = s.dialogue_id;
  j["cut_index"] = s.cut_index;
  j["sub_index"] = s.sub_index;
  j["candidates"] = s.candidates;
  j["language"] = language_name(s.language);
  j["template_version"] = s.template_version;
  return j;
}

InstructionSample sample_from_json(const Json& j) {
  InstructionSample s;
  s.instruction = j.at("instruction").get<std::string>();
  s.input = j.at("input").get<std::string>();
  s.output = j.at("output").get<std::string>();
  auto kind = tasks::parse_task(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("", 0, "unknown task kind in instruction sample");
  s.kind = *kind;
  s.category = j.at("category").get<std::string>();
  s.dialogue_id = j.at("dialogue_id").get<std::string>();
  s.cut_index = j.at("cut_index").get<int>();
  s.sub_index = j.value("sub_index", 0);
  s.candidates = j.value("candidates", std::vector<std::string>{});
  auto lang = parse_language(j.value("language", "en"));
  if (!lang) throw FormatError("", 0, "unknown language in instruction sample");
  s.language = *lang;
  s.template_version = j.value("template_version", "");
  return s;
}

}  // namespace crsllm::llm
