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
#include <optional>
#include <string>
#include <vector>

#include "crsllm/crs/optimizer.hpp"
#include "crsllm/crs/prompt.hpp"
#include "crsllm/crs/unified.hpp"
#include "crsllm/tasks/task.hpp"
#include "json.hpp"

namespace crsllm::crs {

struct RecExample {
  PromptSequence prompt;
  std::vector<std::string> candidates;
  std::string gold;
  // Product behind the assist vector ê. The vector itself is read from the
  // embedding table at each step and treated as a constant.
  std::optional<std::string> assist_product;
};

struct Seq2SeqExample {
  PromptSequence prompt;
  std::string target;
};

struct TrainingData {
  std::vector<RecExample> recommendation;  // D_R
  std::vector<Seq2SeqExample> seq2seq;     // D_U, D_A, D_G
};

// Gold seq2seq target: rendered frames, attribute list or response text.
std::string seq2seq_target(const tasks::TaskInstance& instance);

// Unaugmented examples. Recommendation instances must carry candidates.
RecExample make_rec_example(const tasks::TaskInstance& instance);
Seq2SeqExample make_seq2seq_example(const tasks::TaskInstance& instance);
TrainingData build_training_data(const std::vector<tasks::TaskInstance>& instances);

struct Schedule {
  int warmup_epochs = 5;
  int joint_epochs = 10;
  std::size_t batch_size = 16;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

enum class Stage { kWarmup, kJoint };
const char* stage_name(Stage s);

struct LossPoint {
  Stage stage = Stage::kWarmup;
  int epoch = 0;  // 0 is the evaluation before the first warmup update
  double l_r = 0.0;
  std::optional<double> l_theta;  // absent during warmup
};

// Which loss terms one optimizer step evaluated.
struct BatchRecord {
  Stage stage = Stage::kWarmup;
  int epoch = 0;
  std::size_t rec_terms = 0;
  std::size_t seq2seq_terms = 0;
  double l_r = 0.0;      // mean over recommendation items (0 if none)
  double l_theta = 0.0;  // mean over seq2seq items (0 if none)
  double total = 0.0;    // l_r + l_theta
};

struct TrainingReport {
  std::vector<LossPoint> curve;
  std::vector<BatchRecord> batches;
};

nlohmann::json to_json(const LossPoint& p);

// Stage 1 minimizes L_R on D_R; stage 2 minimizes L_R + L_theta over all of
// D. Frozen systems are left untouched. Throws PreconditionError on empty D_R.
TrainingReport train_two_stage(UnifiedCrs& crs, const TrainingData& data, const Schedule& schedule);

// Mean L_R over `examples` at the current parameters.
double evaluate_recommendation_loss(const UnifiedCrs& crs, const std::vector<RecExample>& examples);

}  // namespace crsllm::crs
