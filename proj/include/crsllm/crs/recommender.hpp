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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"
#include "crsllm/crs/backend.hpp"
#include "crsllm/crs/prompt.hpp"
#include "crsllm/tasks/prediction.hpp"
#include "json.hpp"

namespace crsllm::crs {

inline constexpr double kProbabilityFloor = 1e-12;

class ItemEmbeddingTable {
 public:
  ItemEmbeddingTable() = default;
  // Zero vectors for every id.
  ItemEmbeddingTable(std::vector<std::string> ids, std::size_t dim);

  // Row i is the i-th standard basis vector; dim = catalog size.
  static ItemEmbeddingTable one_hot(const corpus::Catalog& catalog);
  // Normalized sum of seeded random vectors, one per (attribute, value), so
  // products that share attribute values start out close.
  static ItemEmbeddingTable from_attributes(const corpus::Catalog& catalog, std::size_t dim, std::uint64_t seed);
  static ItemEmbeddingTable random(const corpus::Catalog& catalog, std::size_t dim, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  // Throw PreconditionError on unknown ids.
  std::span<const double> row(const std::string& id) const;
  std::span<double> mutable_row(const std::string& id);
  std::span<double> grad_row(const std::string& id);

  std::vector<ParameterBlock> parameter_blocks();
  void zero_grad();

  nlohmann::json save() const;
  static ItemEmbeddingTable load(const nlohmann::json& j);

  bool operator==(const ItemEmbeddingTable& o) const {
    return dim_ == o.dim_ && ids_ == o.ids_ && values_ == o.values_;
  }

 private:
  std::size_t offset(const std::string& id) const;

  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

// CLS(e_i, c, ê): one linear layer over the concatenation
//   [e_i, c, ê, e_i (x) c, e_i (x) ê]
// whose weights are stored as
//   score = w_item.e_i + w_context.c + w_assist.ê + bias
//         + e_i^T (W_context c + W_assist ê).
// The outer-product blocks carry the item/context interaction; without them
// the context term would cancel in the softmax. w_assist and W_assist start
// at zero, and an absent ê is the zero vector.
class RecommendationHead {
 public:
  RecommendationHead() = default;
  RecommendationHead(std::size_t item_dim, std::size_t context_dim);  // all zero

  static RecommendationHead random(std::size_t item_dim, std::size_t context_dim, std::uint64_t seed,
                                   double scale = 0.1);

  std::size_t item_dim() const { return item_dim_; }
  std::size_t context_dim() const { return context_dim_; }

  // Raw scores for `items` (each item_dim long). `assist` may be empty.
  std::vector<double> logits(const std::vector<std::span<const double>>& items, std::span<const double> context,
                             std::span<const double> assist) const;

  // Backward pass for dL/dlogit = grad_logits. Accumulates head gradients;
  // returns dL/dcontext and writes dL/de_i into item_grads[i].
  std::vector<double> backward(const std::vector<std::span<const double>>& items, std::span<const double> context,
                               std::span<const double> assist, std::span<const double> grad_logits,
                               const std::vector<std::span<double>>& item_grads);

  std::vector<ParameterBlock> parameter_blocks();
  void zero_grad();

  nlohmann::json save() const;
  static RecommendationHead load(const nlohmann::json& j);

  std::vector<double> w_item, w_context, w_assist;
  std::vector<double> w_context_outer;  // item_dim x context_dim
  std::vector<double> w_assist_outer;   // item_dim x item_dim
  std::vector<double> bias{0.0};

  bool operator==(const RecommendationHead& o) const {
    return item_dim_ == o.item_dim_ && context_dim_ == o.context_dim_ && w_item == o.w_item &&
           w_context == o.w_context && w_assist == o.w_assist && w_context_outer == o.w_context_outer &&
           w_assist_outer == o.w_assist_outer && bias == o.bias;
  }

 private:
  void check(std::span<const double> context, std::span<const double> assist) const;

  std::size_t item_dim_ = 0;
  std::size_t context_dim_ = 0;
  std::vector<double> g_item_, g_context_, g_assist_, g_context_outer_, g_assist_outer_, g_bias_{0.0};
};

struct RecommendationScores {
  std::vector<std::string> candidates;
  std::vector<double> probabilities;  // aligned with candidates

  // Probability descending, then product_id ascending.
  std::vector<tasks::ScoredProduct> ranked() const;
  double probability_of(const std::string& product_id) const;  // throws if absent
};

std::vector<double> softmax(std::span<const double> logits);

// Softmax over CLS scores for a precomputed context vector.
RecommendationScores score_with_context(const RecommendationHead& head, const ItemEmbeddingTable& embeddings,
                                        std::span<const double> context, const std::vector<std::string>& candidates,
                                        std::span<const double> assist = {});

// r_i = softmax_i CLS(e_i, Enc(X_R)). Throws PreconditionError for unknown
// product ids.
RecommendationScores score_candidates(const RecommendationHead& head, const ItemEmbeddingTable& embeddings,
                                      const Seq2SeqBackend& backend, const PromptSequence& x_r,
                                      const std::vector<std::string>& candidates);

// -log(max(r_gold, 1e-12)).
double recommendation_loss(const RecommendationScores& scores, const std::string& gold);

// Mean per-token NLL; throws PreconditionError on an empty target.
double seq2seq_loss(const Seq2SeqBackend& backend, const PromptSequence& input, const std::string& target);

}  // namespace crsllm::crs
