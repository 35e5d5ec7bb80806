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

#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include "crsllm/crs/backend.hpp"
#include "crsllm/crs/prompt.hpp"
#include "crsllm/crs/recommender.hpp"
#include "crsllm/tasks/prediction.hpp"
#include "crsllm/tasks/task.hpp"

namespace crsllm::crs {

// Backend + item embeddings + recommendation head for one category.
class UnifiedCrs {
 public:
  UnifiedCrs(std::string id, std::unique_ptr<Seq2SeqBackend> backend, ItemEmbeddingTable embeddings,
             RecommendationHead head);

  const std::string& id() const { return id_; }
  Seq2SeqBackend& backend() { return *backend_; }
  const Seq2SeqBackend& backend() const { return *backend_; }
  ItemEmbeddingTable& embeddings() { return embeddings_; }
  const ItemEmbeddingTable& embeddings() const { return embeddings_; }
  RecommendationHead& head() { return head_; }
  const RecommendationHead& head() const { return head_; }

  // Frozen systems ignore training requests (fixed test doubles, or
  // assisters whose parameters must not move once payloads are produced).
  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen) { frozen_ = frozen; }

  // Softmax over CLS(e_i, Enc(x_r), assist); assist empty means ê = 0.
  RecommendationScores score(const PromptSequence& x_r, const std::vector<std::string>& candidates,
                             std::span<const double> assist = {}) const;

  // Prediction for `instance` from an already built (possibly augmented)
  // prompt. Calls into backends that are not concurrency-safe are serialized.
  tasks::Prediction predict(const tasks::TaskInstance& instance, const PromptSequence& prompt,
                            std::span<const double> assist = {}) const;

  // Checkpoint: special-token list, embeddings, head and the backend blob.
  void save_checkpoint(const std::filesystem::path& path) const;
  // Restores parameters into this object. Throws FormatError when the stored
  // special-token list differs from special_token_list().
  void load_checkpoint(const std::filesystem::path& path);

 private:
  std::string generate(const PromptSequence& prompt) const;

  std::string id_;
  std::unique_ptr<Seq2SeqBackend> backend_;
  ItemEmbeddingTable embeddings_;
  RecommendationHead head_;
  bool frozen_ = false;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

// Unaugmented prediction: serialize_context(instance) fed to predict().
tasks::Prediction crs_predict(const UnifiedCrs& crs, const tasks::TaskInstance& instance);

}  // namespace crsllm::crs
