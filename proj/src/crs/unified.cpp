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

#include "crsllm/crs/unified.hpp"

#include <fstream>

#include "crsllm/crs/structured.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::crs {

using tasks::TaskKind;

UnifiedCrs::UnifiedCrs(std::string id, std::unique_ptr<Seq2SeqBackend> backend, ItemEmbeddingTable embeddings,
                       RecommendationHead head)
    : id_(std::move(id)), backend_(std::move(backend)), embeddings_(std::move(embeddings)), head_(std::move(head)) {
  if (!backend_) throw PreconditionError("UnifiedCrs needs a backend");
  if (head_.item_dim() != embeddings_.dim()) throw PreconditionError("head item_dim does not match the embeddings");
  if (head_.context_dim() != backend_->context_dim()) {
    throw PreconditionError("head context_dim does not match the backend");
  }
}

RecommendationScores UnifiedCrs::score(const PromptSequence& x_r, const std::vector<std::string>& candidates,
                                       std::span<const double> assist) const {
  for (const auto& id : candidates) {
    if (!embeddings_.contains(id)) throw PreconditionError("unknown product_id '" + id + "'");
  }
  std::vector<double> c;
  if (backend_->concurrent_safe()) {
    c = backend_->encode(x_r.text);
  } else {
    std::lock_guard lock(*mutex_);
    c = backend_->encode(x_r.text);
  }
  return score_with_context(head_, embeddings_, c, candidates, assist);
}

std::string UnifiedCrs::generate(const PromptSequence& prompt) const {
  if (backend_->concurrent_safe()) return backend_->generate(prompt.text, prompt.task_prompt);
  std::lock_guard lock(*mutex_);
  return backend_->generate(prompt.text, prompt.task_prompt);
}

tasks::Prediction UnifiedCrs::predict(const tasks::TaskInstance& inst, const PromptSequence& prompt,
                                      std::span<const double> assist) const {
  tasks::Prediction p;
  p.kind = inst.kind;
  p.instance_key = inst.key();
  switch (inst.kind) {
    case TaskKind::kUnderstanding:
    case TaskKind::kElicitation: {
      p.raw_text = generate(prompt);
      StructuredParse parsed = parse_structured_output(p.raw_text, inst.kind);
      p.frames = std::move(parsed.frames);
      p.attributes = std::move(parsed.attributes);
      p.diagnostics = std::move(parsed.diagnostics);
      p.parse_ok = parsed.parse_ok;
      break;
    }
    case TaskKind::kGeneration:
      p.raw_text = generate(prompt);
      p.response = text::trim(p.raw_text);
      p.parse_ok = !p.response.empty();
      if (!p.parse_ok) p.diagnostics.push_back("empty response");
      break;
    case TaskKind::kRecommendation: {
      if (inst.candidates.empty()) throw PreconditionError("recommendation instance has no candidates");
      std::vector<std::string> ids;
      for (const auto& c : inst.candidates) ids.push_back(c.product.product_id);
      p.ranking = score(prompt, ids, assist).ranked();
      p.product_id = p.ranking.front().product_id;
      p.letter = tasks::letter_of(inst, *p.product_id);
      break;
    }
  }
  return p;
}

void UnifiedCrs::save_checkpoint(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nlohmann::json j = {{"special_tokens", special_token_list()},
                      {"id", id_},
                      {"backend_kind", backend_->kind()},
                      {"embeddings", embeddings_.save()},
                      {"head", head_.save()},
                      {"backend", backend_->save()}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << j.dump();
}

void UnifiedCrs::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open checkpoint");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  if (j.at("special_tokens").get<std::vector<std::string>>() != special_token_list()) {
    throw FormatError(path.string(), 0, "checkpoint special-token list does not match this build");
  }
  if (j.at("backend_kind").get<std::string>() != backend_->kind()) {
    throw FormatError(path.string(), 0, "checkpoint backend kind '" + j.at("backend_kind").get<std::string>() +
                                            "' does not match '" + backend_->kind() + "'");
  }
  ItemEmbeddingTable table = ItemEmbeddingTable::load(j.at("embeddings"));
  RecommendationHead head = RecommendationHead::load(j.at("head"));
  backend_->load(j.at("backend"));
  if (head.item_dim() != table.dim() || head.context_dim() != backend_->context_dim()) {
    throw FormatError(path.string(), 0, "checkpoint tensors have inconsistent dimensions");
  }
  embeddings_ = std::move(table);
  head_ = std::move(head);
}

tasks::Prediction crs_predict(const UnifiedCrs& crs, const tasks::TaskInstance& instance) {
  return crs.predict(instance, serialize_context(instance));
}

}  // namespace crsllm::crs
