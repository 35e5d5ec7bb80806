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

#include "crsllm/crs/prompt.hpp"

#include <array>

#include "crsllm/crs/structured.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::crs {

using corpus::DialogueTurn;
using corpus::Role;
using tasks::TaskKind;

namespace {

constexpr std::array<SpecialToken, 6> kTokens{SpecialToken::kUser,    SpecialToken::kSystem,
                                              SpecialToken::kUnderstand, SpecialToken::kElicit,
                                              SpecialToken::kRecommend, SpecialToken::kLlm};

const char* role_token(Role r) { return surface(r == Role::kUser ? SpecialToken::kUser : SpecialToken::kSystem); }

}  // namespace

const char* surface(SpecialToken token) {
  switch (token) {
    case SpecialToken::kUser: return "[user]";
    case SpecialToken::kSystem: return "[system]";
    case SpecialToken::kUnderstand: return "[understand]";
    case SpecialToken::kElicit: return "[elicit]";
    case SpecialToken::kRecommend: return "[recommend]";
    case SpecialToken::kLlm: return "[LLM]";
  }
  return "";
}

const std::vector<std::string>& special_token_list() {
  static const std::vector<std::string> list = [] {
    std::vector<std::string> v;
    for (SpecialToken t : kTokens) v.emplace_back(surface(t));
    return v;
  }();
  return list;
}

const char* variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::kXU: return "X_U";
    case PromptVariant::kXS: return "X_S";
    case PromptVariant::kXA: return "X_A";
    case PromptVariant::kXR: return "X_R";
    case PromptVariant::kXG: return "X_G";
  }
  return "?";
}

std::optional<PromptVariant> parse_variant(const std::string& name) {
  for (PromptVariant v : {PromptVariant::kXU, PromptVariant::kXS, PromptVariant::kXA, PromptVariant::kXR,
                          PromptVariant::kXG}) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

std::string make_task_prompt(TaskKind kind) {
  switch (kind) {
    case TaskKind::kUnderstanding: return "Identify attributes and values:";
    case TaskKind::kElicitation: return "Select an attribute to ask:";
    case TaskKind::kGeneration: return "Generate a response:";
    case TaskKind::kRecommendation: break;
  }
  throw PreconditionError("recommendation is scored by the head and has no task prompt");
}

PromptVariant default_variant(const tasks::TaskInstance& inst) {
  switch (inst.kind) {
    case TaskKind::kUnderstanding:
      return inst.current && inst.current->role() == Role::kSystem ? PromptVariant::kXS : PromptVariant::kXU;
    case TaskKind::kElicitation: return PromptVariant::kXA;
    case TaskKind::kRecommendation: return PromptVariant::kXR;
    case TaskKind::kGeneration: return PromptVariant::kXG;
  }
  return PromptVariant::kXU;
}

std::string render_turns(const std::vector<DialogueTurn>& turns, PromptVariant variant) {
  std::vector<std::string> parts;
  for (const DialogueTurn& t : turns) {
    if (t.role() == Role::kSystem) {
      if (variant == PromptVariant::kXA && !t.elicit_attributes.empty()) {
        parts.push_back(std::string(surface(SpecialToken::kElicit)) + " " + render_attributes(t.elicit_attributes));
      }
      if (variant == PromptVariant::kXR && !t.recommended_products.empty()) {
        parts.push_back(std::string(surface(SpecialToken::kRecommend)) + " " +
                        text::join(t.recommended_products, ";"));
      }
    }
    parts.push_back(std::string(role_token(t.role())) + " " + t.utterance.text);
    if (!t.frames.empty()) {
      parts.push_back(std::string(surface(SpecialToken::kUnderstand)) + " " + render_frames(t.frames));
    }
  }
  return text::join(parts, " ");
}

PromptSequence serialize_context(const tasks::TaskInstance& inst, PromptVariant variant) {
  auto mismatch = [&] {
    return PreconditionError(std::string("variant ") + variant_name(variant) + " does not fit a " +
                             tasks::task_name(inst.kind) + " instance");
  };
  PromptSequence seq;
  seq.variant = variant;
  std::string body = render_turns(inst.context, variant);
  auto append = [&](const std::string& part) {
    if (!body.empty()) body += " ";
    body += part;
  };
  switch (variant) {
    case PromptVariant::kXU:
    case PromptVariant::kXS: {
      const Role expected = variant == PromptVariant::kXU ? Role::kUser : Role::kSystem;
      if (inst.kind != TaskKind::kUnderstanding || !inst.current || inst.current->role() != expected) throw mismatch();
      append(std::string(role_token(expected)) + " " + inst.current->utterance.text);
      seq.task_prompt = make_task_prompt(TaskKind::kUnderstanding);
      break;
    }
    case PromptVariant::kXA:
      if (inst.kind != TaskKind::kElicitation) throw mismatch();
      seq.task_prompt = make_task_prompt(TaskKind::kElicitation);
      break;
    case PromptVariant::kXR:
      if (inst.kind != TaskKind::kRecommendation) throw mismatch();
      break;
    case PromptVariant::kXG:
      if (inst.kind != TaskKind::kGeneration) throw mismatch();
      if (!inst.given_attributes.empty()) {
        append(std::string(surface(SpecialToken::kElicit)) + " " + render_attributes(inst.given_attributes));
      }
      if (!inst.given_products.empty()) {
        append(std::string(surface(SpecialToken::kRecommend)) + " " + text::join(inst.given_products, ";"));
      }
      seq.task_prompt = make_task_prompt(TaskKind::kGeneration);
      break;
  }
  seq.text = std::move(body);
  return seq;
}

PromptSequence serialize_context(const tasks::TaskInstance& inst) {
  return serialize_context(inst, default_variant(inst));
}

namespace {

struct Segment {
  SpecialToken token;
  std::string content;
};

// Special tokens only count as delimiters when they stand alone between
// spaces (or at the ends of the text).
std::vector<Segment> segments(const std::string& s, std::string& leading) {
  std::vector<Segment> out;
  std::size_t content_start = 0;
  std::optional<SpecialToken> open;
  std::size_t i = 0;
  auto close = [&](std::size_t end) {
    std::size_t stop = end;
    if (stop > content_start && stop > 0 && s[stop - 1] == ' ') --stop;
    std::string content = stop > content_start ? s.substr(content_start, stop - content_start) : std::string();
    if (open) {
      out.push_back({*open, std::move(content)});
    } else {
      leading = std::move(content);
    }
  };
  while (i < s.size()) {
    bool matched = false;
    if (i == 0 || s[i - 1] == ' ') {
      for (SpecialToken t : kTokens) {
        const std::string tok = surface(t);
        if (s.compare(i, tok.size(), tok) == 0 && (i + tok.size() == s.size() || s[i + tok.size()] == ' ')) {
          close(i);
          open = t;
          i += tok.size();
          if (i < s.size()) ++i;
          content_start = i;
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }
  close(s.size());
  return out;
}

}  // namespace

ParsedPrompt parse_prompt(const std::string& s) {
  ParsedPrompt out;
  std::string leading;
  const auto segs = segments(s, leading);
  if (!text::trim(leading).empty()) throw FormatError("", 0, "prompt text before the first special token");
  std::vector<std::string> pending_elicit, pending_recommend;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& seg = segs[k];
    if (out.llm_segment) throw FormatError("", 0, "content after the [LLM] segment");
    switch (seg.token) {
      case SpecialToken::kElicit:
        pending_elicit = text::split(seg.content, ";");
        break;
      case SpecialToken::kRecommend:
        pending_recommend = text::split(seg.content, ";");
        break;
      case SpecialToken::kUser:
      case SpecialToken::kSystem: {
        ParsedTurn t;
        t.role = seg.token == SpecialToken::kUser ? Role::kUser : Role::kSystem;
        t.text = seg.content;
        if (t.role == Role::kUser && (!pending_elicit.empty() || !pending_recommend.empty())) {
          throw FormatError("", 0, "elicit/recommend segment before a user turn");
        }
        t.elicit = std::exchange(pending_elicit, {});
        t.recommend = std::exchange(pending_recommend, {});
        out.turns.push_back(std::move(t));
        break;
      }
      case SpecialToken::kUnderstand: {
        if (out.turns.empty()) throw FormatError("", 0, "[understand] before any turn");
        StructuredParse p = parse_structured_output(seg.content, TaskKind::kUnderstanding);
        if (!p.parse_ok) throw FormatError("", 0, "malformed frames '" + seg.content + "'");
        out.turns.back().frames = std::move(p.frames);
        break;
      }
      case SpecialToken::kLlm:
        out.llm_segment = seg.content;
        break;
    }
  }
  out.tail_elicit = std::move(pending_elicit);
  out.tail_recommend = std::move(pending_recommend);
  return out;
}

std::string strip_llm_segment(const std::string& s) {
  const std::string marker = std::string(" ") + surface(SpecialToken::kLlm);
  const auto pos = s.rfind(marker);
  if (pos == std::string::npos) return s;
  const std::size_t end = pos + marker.size();
  if (end != s.size() && s[end] != ' ') return s;
  return s.substr(0, pos);
}

}  // namespace crsllm::crs
