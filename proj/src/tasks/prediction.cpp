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

#include "crsllm/tasks/prediction.hpp"

#include <algorithm>

namespace crsllm::tasks {

using Json = nlohmann::json;

std::vector<ScoredProduct> rank(std::vector<ScoredProduct> scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const ScoredProduct& a, const ScoredProduct& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.product_id < b.product_id;
  });
  return scores;
}

Prediction gold_prediction(const TaskInstance& inst) {
  Prediction p;
  p.kind = inst.kind;
  p.instance_key = inst.key();
  switch (inst.kind) {
    case TaskKind::kUnderstanding: p.frames = inst.gold_frames; break;
    case TaskKind::kElicitation: p.attributes = inst.gold_attributes; break;
    case TaskKind::kRecommendation:
      p.product_id = inst.gold_product;
      p.letter = letter_of(inst, *inst.gold_product);
      break;
    case TaskKind::kGeneration: p.response = inst.gold_response.value_or(""); break;
  }
  return p;
}

Json to_json(const Prediction& p) {
  Json frames = Json::array();
  for (const auto& f : p.frames) frames.push_back({{"attribute", f.attribute}, {"value", f.value}});
  Json ranking = Json::array();
  for (const auto& s : p.ranking) ranking.push_back({{"product_id", s.product_id}, {"probability", s.probability}});
  Json j = {{"kind", task_name(p.kind)},
            {"key", p.instance_key},
            {"frames", frames},
            {"attributes", p.attributes},
            {"letter", p.letter ? Json(std::string(1, *p.letter)) : Json()},
            {"product_id", p.product_id ? Json(*p.product_id) : Json()},
            {"ranking", ranking},
            {"response", p.response},
            {"raw_text", p.raw_text},
            {"parse_ok", p.parse_ok},
            {"diagnostics", p.diagnostics}};
  return j;
}

Prediction prediction_from_json(const Json& j) {
  Prediction p;
  p.kind = parse_task(j.at("kind").get<std::string>()).value_or(TaskKind::kUnderstanding);
  p.instance_key = j.value("key", "");
  for (const auto& f : j.value("frames", Json::array())) {
    p.frames.push_back({f.at("attribute").get<std::string>(), f.at("value").get<std::string>()});
  }
  p.attributes = j.value("attributes", std::vector<std::string>{});
  if (j.contains("letter") && j.at("letter").is_string()) p.letter = j.at("letter").get<std::string>().at(0);
  if (j.contains("product_id") && j.at("product_id").is_string()) p.product_id = j.at("product_id").get<std::string>();
  for (const auto& s : j.value("ranking", Json::array())) {
    p.ranking.push_back({s.at("product_id").get<std::string>(), s.at("probability").get<double>()});
  }
  p.response = j.value("response", "");
  p.raw_text = j.value("raw_text", "");
  p.parse_ok = j.value("parse_ok", true);
  p.diagnostics = j.value("diagnostics", std::vector<std::string>{});
  return p;
}

}  // namespace crsllm::tasks
