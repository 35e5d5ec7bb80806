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

#include "crsllm/crs/oracle.hpp"

#include <cmath>

#include "crsllm/crs/training.hpp"
#include "crsllm/crs/tokenizer.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::crs {

using tasks::TaskKind;

std::string CrsGoldTable::key(const std::string& text, const std::string& task_prompt) {
  return strip_llm_segment(text) + '\x1f' + task_prompt;
}

void CrsGoldTable::add(const tasks::TaskInstance& inst) {
  const PromptSequence seq = serialize_context(inst);
  if (inst.kind == TaskKind::kRecommendation) {
    products[seq.text] = *inst.gold_product;
    return;
  }
  const std::string k = key(seq.text, seq.task_prompt);
  outputs[k] = seq2seq_target(inst);
  kinds[k] = inst.kind;
}

CrsGoldTable build_crs_gold_table(const std::vector<tasks::TaskInstance>& instances) {
  CrsGoldTable t;
  for (const auto& inst : instances) t.add(inst);
  return t;
}

namespace {

std::vector<double> token_losses(const std::string& produced, const std::string& target) {
  const std::size_t n = tokenize(target).size() + 1;
  const double miss = -std::log(kProbabilityFloor);
  return std::vector<double>(n, produced == target ? 0.0 : miss);
}

class OracleSeq2Seq final : public Seq2SeqBackend {
 public:
  OracleSeq2Seq(CrsGoldTable gold, std::map<std::string, std::size_t> index, std::optional<NoiseSpec> noise)
      : gold_(std::move(gold)), index_(std::move(index)), noise_(std::move(noise)) {}

  std::string kind() const override { return noise_ ? "noisy_oracle" : "oracle"; }
  std::size_t context_dim() const override { return index_.size(); }

  std::vector<double> encode(const std::string& text) const override {
    std::vector<double> c(index_.size(), 0.0);
    const std::string stripped = strip_llm_segment(text);
    auto it = gold_.products.find(stripped);
    if (it == gold_.products.end()) return c;
    const std::size_t g = index_.at(it->second);
    c[g] = kOracleMargin;
    if (noise_ && !noise_keeps_gold(noise_->accuracy, noise_->seed, stripped)) {
      c[g] = -kOracleMargin;
      if (index_.size() > 1) {
        const std::size_t shift = 1 + derive_seed(noise_->seed, {"product", stripped}) % (index_.size() - 1);
        c[(g + shift) % index_.size()] = kOracleMargin;
      }
    }
    return c;
  }

  std::string generate(const std::string& text, const std::string& task_prompt) const override {
    const std::string k = CrsGoldTable::key(text, task_prompt);
    auto it = gold_.outputs.find(k);
    if (it == gold_.outputs.end()) return "";
    if (noise_ && !noise_keeps_gold(noise_->accuracy, noise_->seed, k)) {
      return wrong_output(gold_.kinds.at(k), it->second, *noise_, k);
    }
    return it->second;
  }

  std::vector<double> token_nll(const std::string& text, const std::string& task_prompt,
                                const std::string& target) const override {
    return token_losses(generate(text, task_prompt), target);
  }

  nlohmann::json save() const override { return {{"kind", kind()}}; }
  void load(const nlohmann::json&) override {
    throw PreconditionError("oracle backends are rebuilt from data, not loaded");
  }

 private:
  CrsGoldTable gold_;
  std::map<std::string, std::size_t> index_;
  std::optional<NoiseSpec> noise_;
};

class CopyAssistSeq2Seq final : public Seq2SeqBackend {
 public:
  std::string kind() const override { return "copy_assist"; }
  std::size_t context_dim() const override { return 1; }
  std::vector<double> encode(const std::string&) const override { return {0.0}; }

  std::string generate(const std::string& text, const std::string&) const override {
    const std::string marker = std::string(" ") + surface(SpecialToken::kLlm);
    const auto pos = text.rfind(marker);
    if (pos == std::string::npos) return "";
    return text::trim(text.substr(pos + marker.size()));
  }

  std::vector<double> token_nll(const std::string& text, const std::string& task_prompt,
                                const std::string& target) const override {
    return token_losses(generate(text, task_prompt), target);
  }

  nlohmann::json save() const override { return {{"kind", kind()}}; }
  void load(const nlohmann::json&) override {}
};

std::map<std::string, std::size_t> product_index(const corpus::Catalog& catalog) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < catalog.size(); ++i) index.emplace(catalog.products()[i].product_id, i);
  return index;
}

}  // namespace

std::unique_ptr<UnifiedCrs> make_oracle_crs(const std::string& id, const corpus::Catalog& catalog, CrsGoldTable gold,
                                            std::optional<NoiseSpec> noise) {
  const std::size_t n = catalog.size();
  RecommendationHead head(n, n);
  for (std::size_t i = 0; i < n; ++i) head.w_context_outer[i * n + i] = 1.0;
  auto crs = std::make_unique<UnifiedCrs>(
      id, std::make_unique<OracleSeq2Seq>(std::move(gold), product_index(catalog), std::move(noise)),
      ItemEmbeddingTable::one_hot(catalog), std::move(head));
  crs->set_frozen(true);
  return crs;
}

std::unique_ptr<UnifiedCrs> make_copy_assist_crs(const std::string& id, const corpus::Catalog& catalog) {
  const std::size_t n = catalog.size();
  RecommendationHead head(n, 1);
  for (std::size_t i = 0; i < n; ++i) head.w_assist_outer[i * n + i] = kOracleMargin;
  auto crs = std::make_unique<UnifiedCrs>(id, std::make_unique<CopyAssistSeq2Seq>(),
                                          ItemEmbeddingTable::one_hot(catalog), std::move(head));
  crs->set_frozen(true);
  return crs;
}

std::unique_ptr<UnifiedCrs> make_tiny_crs(const std::string& id, const corpus::Catalog& catalog,
                                          const TinyCrsConfig& config) {
  auto backend = std::make_unique<TinySeq2Seq>(config.backend);
  ItemEmbeddingTable table = config.attribute_init
                                 ? ItemEmbeddingTable::from_attributes(catalog, config.item_dim, config.seed)
                                 : ItemEmbeddingTable::random(catalog, config.item_dim, config.seed);
  RecommendationHead head =
      RecommendationHead::random(config.item_dim, config.backend.context_dim, derive_seed(config.seed, {"head"}));
  return std::make_unique<UnifiedCrs>(id, std::move(backend), std::move(table), std::move(head));
}

}  // namespace crsllm::crs
