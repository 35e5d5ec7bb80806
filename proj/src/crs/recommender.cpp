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

#include "crsllm/crs/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crsllm/crs/tokenizer.hpp"
#include "crsllm/simd/kernels.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"

namespace crsllm::crs {

using Json = nlohmann::json;

// ---- ItemEmbeddingTable ----------------------------------------------------

ItemEmbeddingTable::ItemEmbeddingTable(std::vector<std::string> ids, std::size_t dim)
    : dim_(dim), ids_(std::move(ids)), values_(ids_.size() * dim, 0.0), grads_(ids_.size() * dim, 0.0) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw PreconditionError("duplicate embedding id '" + ids_[i] + "'");
  }
}

namespace {

std::vector<std::string> catalog_ids(const corpus::Catalog& catalog) {
  std::vector<std::string> ids;
  for (const auto& p : catalog.products()) ids.push_back(p.product_id);
  return ids;
}

}  // namespace

ItemEmbeddingTable ItemEmbeddingTable::one_hot(const corpus::Catalog& catalog) {
  ItemEmbeddingTable t(catalog_ids(catalog), catalog.size());
  for (std::size_t i = 0; i < t.size(); ++i) t.values_[i * t.dim_ + i] = 1.0;
  return t;
}

ItemEmbeddingTable ItemEmbeddingTable::from_attributes(const corpus::Catalog& catalog, std::size_t dim,
                                                       std::uint64_t seed) {
  ItemEmbeddingTable t(catalog_ids(catalog), dim);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const corpus::Product& p = catalog.products()[i];
    std::span<double> row(&t.values_[i * dim], dim);
    for (const auto& [attr, value] : p.attributes) {
      std::mt19937_64 rng(derive_seed(seed, {attr, value}));
      std::normal_distribution<double> n(0.0, 1.0);
      for (double& x : row) x += n(rng);
    }
    double norm = std::sqrt(simd::dot(row, row));
    if (norm == 0.0) {
      std::mt19937_64 rng(derive_seed(seed, {p.product_id}));
      std::normal_distribution<double> n(0.0, 1.0);
      for (double& x : row) x = n(rng);
      norm = std::sqrt(simd::dot(row, row));
    }
    for (double& x : row) x /= norm;
  }
  return t;
}

ItemEmbeddingTable ItemEmbeddingTable::random(const corpus::Catalog& catalog, std::size_t dim, std::uint64_t seed) {
  ItemEmbeddingTable t(catalog_ids(catalog), dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (double& x : t.values_) x = n(rng);
  return t;
}

std::size_t ItemEmbeddingTable::offset(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw PreconditionError("product '" + id + "' is not in the embedding table");
  return it->second * dim_;
}

std::span<const double> ItemEmbeddingTable::row(const std::string& id) const {
  return {&values_[offset(id)], dim_};
}
std::span<double> ItemEmbeddingTable::mutable_row(const std::string& id) { return {&values_[offset(id)], dim_}; }
std::span<double> ItemEmbeddingTable::grad_row(const std::string& id) { return {&grads_[offset(id)], dim_}; }

std::vector<ParameterBlock> ItemEmbeddingTable::parameter_blocks() { return {{"item_embedding", values_, grads_}}; }

void ItemEmbeddingTable::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

Json ItemEmbeddingTable::save() const { return {{"dim", dim_}, {"ids", ids_}, {"values", values_}}; }

ItemEmbeddingTable ItemEmbeddingTable::load(const Json& j) {
  ItemEmbeddingTable t(j.at("ids").get<std::vector<std::string>>(), j.at("dim").get<std::size_t>());
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != t.values_.size()) throw FormatError("", 0, "embedding table has the wrong size");
  t.values_ = std::move(values);
  return t;
}

// ---- RecommendationHead ----------------------------------------------------

RecommendationHead::RecommendationHead(std::size_t item_dim, std::size_t context_dim)
    : w_item(item_dim, 0.0),
      w_context(context_dim, 0.0),
      w_assist(item_dim, 0.0),
      w_context_outer(item_dim * context_dim, 0.0),
      w_assist_outer(item_dim * item_dim, 0.0),
      item_dim_(item_dim),
      context_dim_(context_dim),
      g_item_(item_dim, 0.0),
      g_context_(context_dim, 0.0),
      g_assist_(item_dim, 0.0),
      g_context_outer_(item_dim * context_dim, 0.0),
      g_assist_outer_(item_dim * item_dim, 0.0) {}

RecommendationHead RecommendationHead::random(std::size_t item_dim, std::size_t context_dim, std::uint64_t seed,
                                              double scale) {
  RecommendationHead h(item_dim, context_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto* v : {&h.w_item, &h.w_context, &h.w_context_outer}) {
    for (double& x : *v) x = u(rng);
  }
  return h;
}

void RecommendationHead::check(std::span<const double> context, std::span<const double> assist) const {
  if (context.size() != context_dim_) {
    throw PreconditionError("context vector has dimension " + std::to_string(context.size()) + ", head expects " +
                            std::to_string(context_dim_));
  }
  if (!assist.empty() && assist.size() != item_dim_) {
    throw PreconditionError("assist vector has dimension " + std::to_string(assist.size()) + ", head expects " +
                            std::to_string(item_dim_));
  }
}

std::vector<double> RecommendationHead::logits(const std::vector<std::span<const double>>& items,
                                               std::span<const double> context, std::span<const double> assist) const {
  check(context, assist);
  const auto& k = simd::active();
  std::vector<double> u(item_dim_, 0.0);
  k.gemv(w_context_outer.data(), item_dim_, context_dim_, context.data(), u.data());
  double base = bias[0] + k.dot(w_context.data(), context.data(), context_dim_);
  if (!assist.empty()) {
    k.gemv(w_assist_outer.data(), item_dim_, item_dim_, assist.data(), u.data());
    base += k.dot(w_assist.data(), assist.data(), item_dim_);
  }
  k.axpy(1.0, w_item.data(), u.data(), item_dim_);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& e : items) {
    if (e.size() != item_dim_) throw PreconditionError("item vector has the wrong dimension");
    out.push_back(k.dot(e.data(), u.data(), item_dim_) + base);
  }
  return out;
}

std::vector<double> RecommendationHead::backward(const std::vector<std::span<const double>>& items,
                                                 std::span<const double> context, std::span<const double> assist,
                                                 std::span<const double> grad_logits,
                                                 const std::vector<std::span<double>>& item_grads) {
  check(context, assist);
  const auto& k = simd::active();
  std::vector<double> u(item_dim_, 0.0);
  k.gemv(w_context_outer.data(), item_dim_, context_dim_, context.data(), u.data());
  if (!assist.empty()) k.gemv(w_assist_outer.data(), item_dim_, item_dim_, assist.data(), u.data());
  k.axpy(1.0, w_item.data(), u.data(), item_dim_);

  double total = 0.0;
  std::vector<double> weighted(item_dim_, 0.0);  // sum_i g_i e_i
  for (std::size_t i = 0; i < items.size(); ++i) {
    total += grad_logits[i];
    k.axpy(grad_logits[i], items[i].data(), weighted.data(), item_dim_);
    if (i < item_grads.size() && !item_grads[i].empty()) k.axpy(grad_logits[i], u.data(), item_grads[i].data(), item_dim_);
  }
  g_bias_[0] += total;
  k.axpy(1.0, weighted.data(), g_item_.data(), item_dim_);
  k.axpy(total, context.data(), g_context_.data(), context_dim_);
  k.ger(g_context_outer_.data(), item_dim_, context_dim_, 1.0, weighted.data(), context.data());
  if (!assist.empty()) {
    k.axpy(total, assist.data(), g_assist_.data(), item_dim_);
    k.ger(g_assist_outer_.data(), item_dim_, item_dim_, 1.0, weighted.data(), assist.data());
  }
  std::vector<double> dc(context_dim_, 0.0);
  k.gemv_t(w_context_outer.data(), item_dim_, context_dim_, weighted.data(), dc.data());
  k.axpy(total, w_context.data(), dc.data(), context_dim_);
  return dc;
}

std::vector<ParameterBlock> RecommendationHead::parameter_blocks() {
  return {{"head_w_item", w_item, g_item_},
          {"head_w_context", w_context, g_context_},
          {"head_w_assist", w_assist, g_assist_},
          {"head_w_context_outer", w_context_outer, g_context_outer_},
          {"head_w_assist_outer", w_assist_outer, g_assist_outer_},
          {"head_bias", bias, g_bias_}};
}

void RecommendationHead::zero_grad() {
  for (auto* g : {&g_item_, &g_context_, &g_assist_, &g_context_outer_, &g_assist_outer_, &g_bias_}) {
    std::fill(g->begin(), g->end(), 0.0);
  }
}

Json RecommendationHead::save() const {
  return {{"item_dim", item_dim_},
          {"context_dim", context_dim_},
          {"w_item", w_item},
          {"w_context", w_context},
          {"w_assist", w_assist},
          {"w_context_outer", w_context_outer},
          {"w_assist_outer", w_assist_outer},
          {"bias", bias[0]}};
}

RecommendationHead RecommendationHead::load(const Json& j) {
  RecommendationHead h(j.at("item_dim").get<std::size_t>(), j.at("context_dim").get<std::size_t>());
  auto read = [&](const char* key, std::vector<double>& dst) {
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != dst.size()) throw FormatError("", 0, std::string("head tensor '") + key + "' has the wrong size");
    dst = std::move(v);
  };
  read("w_item", h.w_item);
  read("w_context", h.w_context);
  read("w_assist", h.w_assist);
  read("w_context_outer", h.w_context_outer);
  read("w_assist_outer", h.w_assist_outer);
  h.bias[0] = j.at("bias").get<double>();
  return h;
}

// ---- scoring -------------------------------------------------------------------

std::vector<tasks::ScoredProduct> RecommendationScores::ranked() const {
  std::vector<tasks::ScoredProduct> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) out.push_back({candidates[i], probabilities[i]});
  return tasks::rank(std::move(out));
}

double RecommendationScores::probability_of(const std::string& product_id) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == product_id) return probabilities[i];
  }
  throw PreconditionError("product '" + product_id + "' is not among the candidates");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

RecommendationScores score_with_context(const RecommendationHead& head, const ItemEmbeddingTable& embeddings,
                                        std::span<const double> context, const std::vector<std::string>& candidates,
                                        std::span<const double> assist) {
  std::vector<std::span<const double>> items;
  items.reserve(candidates.size());
  for (const auto& id : candidates) items.push_back(embeddings.row(id));
  const std::vector<double> z = head.logits(items, context, assist);
  return {candidates, softmax(z)};
}

RecommendationScores score_candidates(const RecommendationHead& head, const ItemEmbeddingTable& embeddings,
                                      const Seq2SeqBackend& backend, const PromptSequence& x_r,
                                      const std::vector<std::string>& candidates) {
  for (const auto& id : candidates) {
    if (!embeddings.contains(id)) throw PreconditionError("unknown product_id '" + id + "'");
  }
  const std::vector<double> c = backend.encode(x_r.text);
  return score_with_context(head, embeddings, c, candidates);
}

double recommendation_loss(const RecommendationScores& scores, const std::string& gold) {
  return -std::log(std::max(scores.probability_of(gold), kProbabilityFloor));
}

double seq2seq_loss(const Seq2SeqBackend& backend, const PromptSequence& input, const std::string& target) {
  if (tokenize(target).empty()) throw PreconditionError("seq2seq target must contain at least one token");
  const auto nll = backend.token_nll(input.text, input.task_prompt, target);
  double sum = 0.0;
  for (double v : nll) sum += v;
  return sum / static_cast<double>(nll.size());
}

}  // namespace crsllm::crs
