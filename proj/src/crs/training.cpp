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

#include "crsllm/crs/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crsllm/crs/structured.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"

namespace crsllm::crs {

using tasks::TaskKind;

std::string seq2seq_target(const tasks::TaskInstance& inst) {
  switch (inst.kind) {
    case TaskKind::kUnderstanding: return render_frames(inst.gold_frames);
    case TaskKind::kElicitation: return render_attributes(inst.gold_attributes);
    case TaskKind::kGeneration: return inst.gold_response.value_or("");
    case TaskKind::kRecommendation: break;
  }
  throw PreconditionError("recommendation has no seq2seq target");
}

RecExample make_rec_example(const tasks::TaskInstance& inst) {
  if (inst.kind != TaskKind::kRecommendation || inst.candidates.empty()) {
    throw PreconditionError("recommendation example needs a recommendation instance with candidates");
  }
  RecExample ex;
  ex.prompt = serialize_context(inst);
  for (const auto& c : inst.candidates) ex.candidates.push_back(c.product.product_id);
  ex.gold = *inst.gold_product;
  return ex;
}

Seq2SeqExample make_seq2seq_example(const tasks::TaskInstance& inst) {
  return {serialize_context(inst), seq2seq_target(inst)};
}

TrainingData build_training_data(const std::vector<tasks::TaskInstance>& instances) {
  TrainingData data;
  for (const auto& inst : instances) {
    if (inst.kind == TaskKind::kRecommendation) {
      data.recommendation.push_back(make_rec_example(inst));
    } else {
      data.seq2seq.push_back(make_seq2seq_example(inst));
    }
  }
  return data;
}

const char* stage_name(Stage s) { return s == Stage::kWarmup ? "warmup" : "joint"; }

nlohmann::json to_json(const LossPoint& p) {
  return {{"stage", stage_name(p.stage)},
          {"epoch", p.epoch},
          {"L_R", p.l_r},
          {"L_theta", p.l_theta ? nlohmann::json(*p.l_theta) : nlohmann::json()}};
}

namespace {

std::vector<double> assist_vector(const UnifiedCrs& crs, const RecExample& ex) {
  if (!ex.assist_product) return {};
  auto row = crs.embeddings().row(*ex.assist_product);
  return {row.begin(), row.end()};
}

// Forward + backward for one recommendation example; returns its L_R.
double rec_step(UnifiedCrs& crs, const RecExample& ex, double scale) {
  Seq2SeqBackend& backend = crs.backend();
  const std::vector<double> c = backend.encode(ex.prompt.text);
  const std::vector<double> assist = assist_vector(crs, ex);
  std::vector<std::span<const double>> items;
  std::vector<std::span<double>> item_grads;
  for (const auto& id : ex.candidates) {
    items.push_back(crs.embeddings().row(id));
    item_grads.push_back(crs.embeddings().grad_row(id));
  }
  std::vector<double> p = softmax(crs.head().logits(items, c, assist));
  std::size_t gold = ex.candidates.size();
  for (std::size_t i = 0; i < ex.candidates.size(); ++i) {
    if (ex.candidates[i] == ex.gold) gold = i;
  }
  if (gold == ex.candidates.size()) throw PreconditionError("gold product '" + ex.gold + "' is not a candidate");
  const double loss = -std::log(std::max(p[gold], kProbabilityFloor));
  for (double& v : p) v *= scale;
  p[gold] -= scale;
  const std::vector<double> dc = crs.head().backward(items, c, assist, p, item_grads);
  if (backend.trainable()) backend.backprop_encoding(ex.prompt.text, dc);
  return loss;
}

std::vector<ParameterBlock> all_blocks(UnifiedCrs& crs) {
  std::vector<ParameterBlock> blocks = crs.backend().parameter_blocks();
  for (auto& b : crs.embeddings().parameter_blocks()) blocks.push_back(b);
  for (auto& b : crs.head().parameter_blocks()) blocks.push_back(b);
  return blocks;
}

void zero_all(UnifiedCrs& crs) {
  crs.backend().zero_grad();
  crs.embeddings().zero_grad();
  crs.head().zero_grad();
}

struct Item {
  bool rec;
  std::size_t index;
};

}  // namespace

double evaluate_recommendation_loss(const UnifiedCrs& crs, const std::vector<RecExample>& examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : examples) {
    const std::vector<double> assist = assist_vector(crs, ex);
    sum += recommendation_loss(crs.score(ex.prompt, ex.candidates, assist), ex.gold);
  }
  return sum / static_cast<double>(examples.size());
}

TrainingReport train_two_stage(UnifiedCrs& crs, const TrainingData& data, const Schedule& schedule) {
  if (data.recommendation.empty()) throw PreconditionError("train_two_stage needs a non-empty D_R");
  if (schedule.batch_size == 0) throw PreconditionError("batch_size must be positive");
  TrainingReport report;
  if (crs.frozen()) return report;

  Seq2SeqBackend& backend = crs.backend();
  if (backend.trainable() && backend.needs_vocabulary()) {
    std::vector<std::string> texts;
    for (const auto& ex : data.recommendation) texts.push_back(ex.prompt.text);
    for (const auto& ex : data.seq2seq) {
      texts.push_back(ex.prompt.text);
      texts.push_back(ex.prompt.task_prompt);
      texts.push_back(ex.target);
    }
    backend.fit_vocabulary(texts);
  }

  Adam adam(schedule.adam);
  std::mt19937_64 rng(derive_seed(schedule.seed, {"train_two_stage"}));

  auto run_stage = [&](Stage stage, int epochs) {
    std::vector<Item> items;
    for (std::size_t i = 0; i < data.recommendation.size(); ++i) items.push_back({true, i});
    if (stage == Stage::kJoint) {
      for (std::size_t i = 0; i < data.seq2seq.size(); ++i) items.push_back({false, i});
    }
    for (int epoch = 1; epoch <= epochs; ++epoch) {
      std::shuffle(items.begin(), items.end(), rng);
      double epoch_r = 0.0, epoch_t = 0.0;
      std::size_t n_r = 0, n_t = 0;
      for (std::size_t start = 0; start < items.size(); start += schedule.batch_size) {
        const std::size_t end = std::min(items.size(), start + schedule.batch_size);
        BatchRecord rec;
        rec.stage = stage;
        rec.epoch = epoch;
        for (std::size_t k = start; k < end; ++k) (items[k].rec ? rec.rec_terms : rec.seq2seq_terms) += 1;
        zero_all(crs);
        double sum_r = 0.0, sum_t = 0.0;
        for (std::size_t k = start; k < end; ++k) {
          if (items[k].rec) {
            sum_r += rec_step(crs, data.recommendation[items[k].index], 1.0 / static_cast<double>(rec.rec_terms));
          } else {
            const Seq2SeqExample& ex = data.seq2seq[items[k].index];
            sum_t += backend.accumulate_seq2seq_gradient(ex.prompt.text, ex.prompt.task_prompt, ex.target,
                                                         1.0 / static_cast<double>(rec.seq2seq_terms));
          }
        }
        rec.l_r = rec.rec_terms ? sum_r / static_cast<double>(rec.rec_terms) : 0.0;
        rec.l_theta = rec.seq2seq_terms ? sum_t / static_cast<double>(rec.seq2seq_terms) : 0.0;
        rec.total = rec.l_r + rec.l_theta;
        adam.step(all_blocks(crs));
        report.batches.push_back(rec);
        epoch_r += sum_r;
        epoch_t += sum_t;
        n_r += rec.rec_terms;
        n_t += rec.seq2seq_terms;
      }
      LossPoint point{stage, epoch, n_r ? epoch_r / static_cast<double>(n_r) : 0.0, std::nullopt};
      if (stage == Stage::kJoint) point.l_theta = n_t ? epoch_t / static_cast<double>(n_t) : 0.0;
      report.curve.push_back(point);
    }
  };

  report.curve.push_back({Stage::kWarmup, 0, evaluate_recommendation_loss(crs, data.recommendation), std::nullopt});
  run_stage(Stage::kWarmup, schedule.warmup_epochs);
  run_stage(Stage::kJoint, schedule.joint_epochs);
  return report;
}

}  // namespace crsllm::crs
