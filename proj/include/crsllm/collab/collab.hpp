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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crsllm/crs/prompt.hpp"
#include "crsllm/crs/recommender.hpp"
#include "crsllm/crs/training.hpp"
#include "crsllm/crs/unified.hpp"
#include "crsllm/llm/backend.hpp"
#include "crsllm/llm/instruction.hpp"
#include "crsllm/tasks/prediction.hpp"
#include "crsllm/tasks/task.hpp"
#include "json.hpp"

namespace crsllm::collab {

enum class Direction { kNone, kCrsAssistsLlm, kLlmAssistsCrs };
const char* direction_name(Direction d);

enum class SystemType { kLlm, kCrs };

// Role ids: two LLMs (CLLM, ALLM) and two CRSs (BCRS, CCRS). Which concrete
// backend plays a role is a configuration matter.
const std::vector<std::string>& llm_roles();
const std::vector<std::string>& crs_roles();
std::optional<SystemType> role_type(const std::string& role);

// "<assister>-<assisted>", e.g. "CLLM-BCRS" (an LLM assisting a CRS). A
// baseline has no assister and is named after its single role.
struct Variant {
  std::string assister;
  std::string assisted;
  Direction direction = Direction::kNone;

  std::string name() const;
  SystemType assisted_type() const;
  bool operator==(const Variant&) const = default;
};

// Throws ConfigError for names outside the eight pairings and four roles.
Variant parse_variant_name(const std::string& name);
const std::vector<Variant>& collaboration_variants();  // the eight pairings
std::vector<Variant> baseline_variants();               // one per role

enum class Source { kCrs, kLlm };

struct AssistPayload {
  Source source = Source::kCrs;
  tasks::TaskKind kind = tasks::TaskKind::kUnderstanding;
  std::string instance_key;
  std::string text_form;  // rendered frames / attributes / response / letters
  std::optional<std::vector<tasks::ScoredProduct>> ranked_list;  // recommendation from a CRS
  std::optional<std::vector<double>> assist_embedding;           // recommendation from an LLM
  std::optional<std::string> predicted_product;
  bool parse_ok = true;

  bool operator==(const AssistPayload&) const = default;
};

// Recommendation text_form is the candidate letters in ranking order, "C, B, A".
AssistPayload crs_payload(const tasks::Prediction& prediction, const tasks::TaskInstance& instance);

// For recommendation `embeddings` supplies ê: the row of the predicted
// product, or zeros when the output did not parse.
AssistPayload llm_payload(const tasks::Prediction& prediction, const tasks::TaskInstance& instance,
                          const crs::ItemEmbeddingTable* embeddings = nullptr);

// ê for a payload against a (possibly newer) embedding table.
std::vector<double> assist_vector(const AssistPayload& payload, const crs::ItemEmbeddingTable& embeddings);

nlohmann::json to_json(const AssistPayload& payload);
AssistPayload payload_from_json(const nlohmann::json& j);

bool is_crs_augmented(const llm::InstructionSample& sample);

// Appends the advisory sentence to the instruction and a CRS section to the
// input. Throws PreconditionError on a source/kind mismatch or when the
// sample already carries a CRS section.
llm::InstructionSample augment_instruction_with_crs(const llm::InstructionSample& sample,
                                                    const AssistPayload& payload);

// text + " [LLM] " + rendering; a payload that did not parse leaves a bare
// " [LLM]" marker. Throws PreconditionError for X_R, for a source/kind
// mismatch and for text that already has an [LLM] segment.
crs::PromptSequence augment_prompt_with_llm(const crs::PromptSequence& seq, const AssistPayload& payload);

// Softmax over CLS(e_i, Enc(X_R), ê) with ê from the payload (zeros when absent).
crs::RecommendationScores enhanced_score_candidates(const crs::RecommendationHead& head,
                                                    const crs::ItemEmbeddingTable& embeddings,
                                                    const crs::Seq2SeqBackend& backend, const crs::PromptSequence& x_r,
                                                    const std::vector<std::string>& candidates,
                                                    const AssistPayload& payload);

// Supplies systems for one category.
class SystemProvider {
 public:
  virtual ~SystemProvider() = default;
  // Already trained and frozen; throw ConfigError for unbound roles.
  virtual const crs::UnifiedCrs& assister_crs(const std::string& role) = 0;
  virtual const llm::LlmBackend& assister_llm(const std::string& role) = 0;
  // Untrained instances for the assisted side and for baselines.
  virtual std::unique_ptr<crs::UnifiedCrs> fresh_crs(const std::string& role) = 0;
  virtual std::unique_ptr<llm::LlmBackend> fresh_llm(const std::string& role) = 0;
};

struct CollabData {
  corpus::Category category;
  std::vector<tasks::TaskInstance> train;  // every task; recommendation with candidates
  std::vector<tasks::TaskInstance> test;   // the evaluated task only
  llm::Language language = llm::Language::kEn;
  crs::Schedule schedule;
  bool gold_assist = false;  // diagnostic: payloads from gold instead of the assister
  std::size_t threads = 1;
};

struct CollabResult {
  Variant variant;
  tasks::TaskKind kind = tasks::TaskKind::kUnderstanding;
  std::vector<tasks::Prediction> predictions;  // aligned with CollabData::test
  std::vector<AssistPayload> train_payloads;
  std::vector<AssistPayload> test_payloads;
  std::vector<std::string> assisted_inputs;  // what the assisted side saw per test instance
  std::optional<crs::TrainingReport> training;
  std::shared_ptr<crs::UnifiedCrs> assisted_crs;  // the trained CRS when one was assisted
};

// Assister predictions become payloads for the evaluated task on both
// splits; the assisted system is trained on the augmented training data and
// evaluated on the augmented test data. Baselines train and evaluate one
// system without payloads.
CollabResult run_collaboration(const Variant& variant, tasks::TaskKind kind, const CollabData& data,
                               SystemProvider& systems);

// Building blocks shared with the runners.
llm::InstructionSample llm_input(const tasks::TaskInstance& instance, const CollabData& data);
tasks::Prediction llm_predict(const llm::LlmBackend& backend, const llm::InstructionSample& sample,
                              const tasks::TaskInstance& instance);

}  // namespace crsllm::collab
