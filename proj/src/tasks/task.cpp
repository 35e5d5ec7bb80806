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

#include "crsllm/tasks/task.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "crsllm/corpus/io.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"

namespace crsllm::tasks {

using corpus::DialogueTurn;
using corpus::Role;
using Json = nlohmann::json;

const char* task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kUnderstanding: return "understanding";
    case TaskKind::kElicitation: return "elicitation";
    case TaskKind::kRecommendation: return "recommendation";
    case TaskKind::kGeneration: return "generation";
  }
  return "?";
}

std::optional<TaskKind> parse_task(const std::string& name) {
  for (TaskKind k : kAllTasks) {
    if (name == task_name(k)) return k;
  }
  return std::nullopt;
}

char candidate_letter(std::size_t i) {
  if (i >= kMaxCandidates) throw PreconditionError("candidate position out of range");
  return static_cast<char>('A' + i);
}

std::optional<std::size_t> letter_position(char letter) {
  if (letter < 'A' || letter >= static_cast<char>('A' + kMaxCandidates)) return std::nullopt;
  return static_cast<std::size_t>(letter - 'A');
}

std::string TaskInstance::key() const {
  std::string k = dialogue_id + "#" + std::to_string(cut_index) + "#" + task_name(kind);
  if (sub_index != 0) k += "#" + std::to_string(sub_index);
  return k;
}

std::vector<corpus::SemanticFrame> TaskInstance::acquired_needs() const {
  std::vector<corpus::SemanticFrame> out;
  for (const DialogueTurn& t : context) {
    if (t.role() != Role::kUser) continue;
    out.insert(out.end(), t.frames.begin(), t.frames.end());
  }
  return out;
}

std::vector<TaskInstance> extract_task_instances(const corpus::Dialogue& d, TaskKind kind) {
  std::vector<TaskInstance> out;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const DialogueTurn& turn = d.turns[i];
    auto base = [&] {
      TaskInstance inst;
      inst.kind = kind;
      inst.dialogue_id = d.dialogue_id;
      inst.category = d.category;
      inst.cut_index = static_cast<int>(i);
      inst.context.assign(d.turns.begin(), d.turns.begin() + static_cast<std::ptrdiff_t>(i));
      inst.behaviors = d.user_behaviors;
      return inst;
    };
    switch (kind) {
      case TaskKind::kUnderstanding:
        if (!turn.frames.empty()) {
          TaskInstance inst = base();
          inst.current = turn;
          inst.gold_frames = turn.frames;
          out.push_back(std::move(inst));
        }
        break;
      case TaskKind::kElicitation:
        if (turn.role() == Role::kSystem && !turn.elicit_attributes.empty()) {
          TaskInstance inst = base();
          inst.gold_attributes = turn.elicit_attributes;
          out.push_back(std::move(inst));
        }
        break;
      case TaskKind::kRecommendation:
        if (turn.role() == Role::kSystem) {
          for (std::size_t k = 0; k < turn.recommended_products.size(); ++k) {
            TaskInstance inst = base();
            inst.sub_index = static_cast<int>(k);
            inst.gold_product = turn.recommended_products[k];
            out.push_back(std::move(inst));
          }
        }
        break;
      case TaskKind::kGeneration:
        if (turn.role() == Role::kSystem) {
          TaskInstance inst = base();
          inst.gold_response = turn.utterance.text;
          inst.given_attributes = turn.elicit_attributes;
          inst.given_products = turn.recommended_products;
          out.push_back(std::move(inst));
        }
        break;
    }
  }
  return out;
}

TaskInstance sample_candidates(const TaskInstance& instance, const corpus::Catalog& catalog,
                               std::uint64_t seed) {
  if (instance.kind != TaskKind::kRecommendation || !instance.gold_product) {
    throw PreconditionError("sample_candidates needs a recommendation instance with a gold product");
  }
  if (catalog.size() < kMaxCandidates) {
    throw PreconditionError("catalog '" + catalog.category().id + "' has " +
                            std::to_string(catalog.size()) + " products; 20 are required");
  }
  const std::size_t gold = catalog.index_of(*instance.gold_product);

  std::mt19937_64 rng(derive_seed(seed, {instance.key()}));
  std::vector<std::size_t> others(catalog.size());
  std::iota(others.begin(), others.end(), 0);
  others.erase(others.begin() + static_cast<std::ptrdiff_t>(gold));
  // Partial Fisher-Yates: the first 19 entries become a uniform sample.
  for (std::size_t i = 0; i + 1 < kMaxCandidates; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
    std::swap(others[i], others[pick(rng)]);
  }
  others.resize(kMaxCandidates - 1);
  const std::size_t gold_pos = std::uniform_int_distribution<std::size_t>(0, kMaxCandidates - 1)(rng);
  others.insert(others.begin() + static_cast<std::ptrdiff_t>(gold_pos), gold);

  TaskInstance out = instance;
  out.candidates.clear();
  for (std::size_t i = 0; i < others.size(); ++i) {
    out.candidates.push_back({candidate_letter(i), catalog.products()[others[i]]});
  }
  return out;
}

std::optional<std::string> resolve_letter(const TaskInstance& instance, char letter) {
  for (const Candidate& c : instance.candidates) {
    if (c.label == letter) return c.product.product_id;
  }
  return std::nullopt;
}

std::optional<char> letter_of(const TaskInstance& instance, const std::string& product_id) {
  for (const Candidate& c : instance.candidates) {
    if (c.product.product_id == product_id) return c.label;
  }
  return std::nullopt;
}

Json to_json(const TaskInstance& inst) {
  Json j = {{"kind", task_name(inst.kind)},
            {"dialogue_id", inst.dialogue_id},
            {"category", inst.category},
            {"cut_index", inst.cut_index},
            {"sub_index", inst.sub_index},
            {"behaviors", inst.behaviors}};
  Json ctx = Json::array();
  for (const auto& t : inst.context) ctx.push_back(corpus::to_json(t));
  j["context"] = ctx;
  switch (inst.kind) {
    case TaskKind::kUnderstanding: {
      j["current"] = corpus::to_json(*inst.current);
      Json frames = Json::array();
      for (const auto& f : inst.gold_frames) frames.push_back({{"attribute", f.attribute}, {"value", f.value}});
      j["gold_frames"] = frames;
      break;
    }
    case TaskKind::kElicitation: j["gold_attributes"] = inst.gold_attributes; break;
    case TaskKind::kRecommendation: {
      j["gold_product"] = *inst.gold_product;
      Json cands = Json::array();
      for (const auto& c : inst.candidates) {
        cands.push_back({{"label", std::string(1, c.label)}, {"product", corpus::to_json(c.product)}});
      }
      j["candidates"] = cands;
      break;
    }
    case TaskKind::kGeneration:
      j["gold_response"] = *inst.gold_response;
      j["given_attributes"] = inst.given_attributes;
      j["given_products"] = inst.given_products;
      break;
  }
  return j;
}

TaskInstance instance_from_json(const Json& j) {
  TaskInstance inst;
  auto kind = parse_task(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("", 0, "unknown task kind '" + j.at("kind").get<std::string>() + "'");
  inst.kind = *kind;
  inst.dialogue_id = j.at("dialogue_id").get<std::string>();
  inst.category = j.at("category").get<std::string>();
  inst.cut_index = j.at("cut_index").get<int>();
  inst.sub_index = j.value("sub_index", 0);
  inst.behaviors = j.value("behaviors", std::vector<std::string>{});
  int index = 0;
  for (const auto& t : j.at("context")) inst.context.push_back(corpus::turn_from_json(t, index++));
  switch (inst.kind) {
    case TaskKind::kUnderstanding:
      inst.current = corpus::turn_from_json(j.at("current"), inst.cut_index);
      for (const auto& f : j.at("gold_frames")) {
        inst.gold_frames.push_back({f.at("attribute").get<std::string>(), f.at("value").get<std::string>()});
      }
      break;
    case TaskKind::kElicitation:
      inst.gold_attributes = j.at("gold_attributes").get<std::vector<std::string>>();
      break;
    case TaskKind::kRecommendation:
      inst.gold_product = j.at("gold_product").get<std::string>();
      for (const auto& c : j.value("candidates", Json::array())) {
        inst.candidates.push_back({c.at("label").get<std::string>().at(0), corpus::product_from_json(c.at("product"))});
      }
      break;
    case TaskKind::kGeneration:
      inst.gold_response = j.at("gold_response").get<std::string>();
      inst.given_attributes = j.value("given_attributes", std::vector<std::string>{});
      inst.given_products = j.value("given_products", std::vector<std::string>{});
      break;
  }
  return inst;
}

}  // namespace crsllm::tasks
