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

#include "crsllm/experiment/systems.hpp"

#include <set>

#include "crsllm/crs/training.hpp"
#include "crsllm/llm/instruction.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/jsonl.hpp"

namespace crsllm::experiment {

using tasks::TaskInstance;
using tasks::TaskKind;

namespace {

std::vector<TaskInstance> instances_of(const std::vector<corpus::Dialogue>& dialogues, const corpus::Catalog& catalog,
                                       TaskKind kind, std::uint64_t seed) {
  std::vector<TaskInstance> out;
  for (const auto& d : dialogues) {
    for (auto& inst : tasks::extract_task_instances(d, kind)) {
      out.push_back(kind == TaskKind::kRecommendation ? tasks::sample_candidates(inst, catalog, seed)
                                                      : std::move(inst));
    }
  }
  return out;
}

}  // namespace

CategoryData prepare_category(const corpus::CategoryCorpus& data, std::uint64_t candidate_seed,
                              std::size_t max_test) {
  CategoryData out;
  out.category = data.catalog.category();
  out.catalog = data.catalog;
  for (TaskKind k : tasks::kAllTasks) {
    auto train = instances_of(data.split.train, data.catalog, k, candidate_seed);
    out.train.insert(out.train.end(), std::make_move_iterator(train.begin()), std::make_move_iterator(train.end()));
    auto test = instances_of(data.split.test, data.catalog, k, candidate_seed);
    if (max_test > 0 && test.size() > max_test) test.resize(max_test);
    out.test[k] = std::move(test);
  }
  return out;
}

ExperimentSystems::ExperimentSystems(const ExperimentConfig& config, const CategoryData& data,
                                     std::optional<std::filesystem::path> checkpoint_dir)
    : config_(config), data_(data), checkpoint_dir_(std::move(checkpoint_dir)) {
  std::set<std::string> responses;
  auto add = [&](const TaskInstance& inst) {
    crs_gold_.add(inst);
    llm_gold_.add(llm::build_instruction_sample(inst, data_.category, config_.language));
    if (inst.gold_response) responses.insert(*inst.gold_response);
  };
  for (const auto& inst : data_.train) add(inst);
  for (const auto& [kind, list] : data_.test) {
    for (const auto& inst : list) add(inst);
  }
  responses_.assign(responses.begin(), responses.end());
}

const BackendBinding& ExperimentSystems::binding(const std::string& role, collab::SystemType type) const {
  if (collab::role_type(role) != type) throw ConfigError("role '" + role + "' is not of the requested system type");
  auto it = config_.backends.find(role);
  if (it == config_.backends.end()) throw ConfigError("no backend bound for role " + role);
  return it->second;
}

std::mutex& ExperimentSystems::role_mutex(const std::string& role) {
  std::lock_guard<std::mutex> lock(map_mutex_);
  auto& m = role_mutexes_[role];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

bool ExperimentSystems::deterministic(const std::string& role) const {
  auto it = config_.backends.find(role);
  return it == config_.backends.end() || it->second.kind != BackendKind::kExternal ||
         it->second.external.temperature == 0.0;
}

std::unique_ptr<crs::UnifiedCrs> ExperimentSystems::fresh_crs(const std::string& role) {
  const BackendBinding& b = binding(role, collab::SystemType::kCrs);
  switch (b.kind) {
    case BackendKind::kOracle: return crs::make_oracle_crs(role, data_.catalog, crs_gold_);
    case BackendKind::kNoisy:
      return crs::make_oracle_crs(role, data_.catalog, crs_gold_,
                                  crs::NoiseSpec{b.accuracy, b.seed, data_.category, responses_});
    case BackendKind::kCopyAssist: return crs::make_copy_assist_crs(role, data_.catalog);
    case BackendKind::kTiny: return crs::make_tiny_crs(role, data_.catalog, b.tiny_crs);
    case BackendKind::kExternal: break;
  }
  throw ConfigError(role + ": external backends serve LLM roles only");
}

std::unique_ptr<llm::LlmBackend> ExperimentSystems::fresh_llm(const std::string& role) {
  const BackendBinding& b = binding(role, collab::SystemType::kLlm);
  switch (b.kind) {
    case BackendKind::kOracle: return llm::make_oracle_llm(llm_gold_);
    case BackendKind::kNoisy:
      return llm::make_noisy_llm(llm_gold_, crs::NoiseSpec{b.accuracy, b.seed, data_.category, responses_});
    case BackendKind::kCopyAssist: return llm::make_copy_assist_llm();
    case BackendKind::kTiny: return llm::make_tiny_llm(b.tiny_llm);
    case BackendKind::kExternal: return std::make_unique<llm::ExternalBackend>(b.external);
  }
  throw ConfigError(role + ": unsupported backend");
}

const crs::UnifiedCrs& ExperimentSystems::assister_crs(const std::string& role) {
  std::lock_guard<std::mutex> lock(role_mutex(role));
  auto it = crs_assisters_.find(role);
  if (it != crs_assisters_.end()) return *it->second;
  auto model = fresh_crs(role);
  if (!model->frozen()) {
    const crs::TrainingReport report = crs::train_two_stage(*model, crs::build_training_data(data_.train), config_.schedule);
    model->set_frozen(true);
    if (checkpoint_dir_) {
      const auto dir = *checkpoint_dir_ / data_.category.id;
      std::filesystem::create_directories(dir);
      model->save_checkpoint(dir / ("assister-" + role + ".json"));
      std::vector<nlohmann::json> rows;
      for (const auto& p : report.curve) rows.push_back(crs::to_json(p));
      jsonl::write_all(dir / ("assister-" + role + ".loss.jsonl"), rows);
    }
  }
  return *crs_assisters_.emplace(role, std::move(model)).first->second;
}

const llm::LlmBackend& ExperimentSystems::assister_llm(const std::string& role) {
  std::lock_guard<std::mutex> lock(role_mutex(role));
  auto it = llm_assisters_.find(role);
  if (it != llm_assisters_.end()) return *it->second;
  auto model = fresh_llm(role);
  if (model->trainable()) {
    std::vector<llm::InstructionSample> samples;
    for (const auto& inst : data_.train) {
      samples.push_back(llm::build_instruction_sample(inst, data_.category, config_.language));
    }
    const llm::AdapterState state = model->fine_tune(samples);
    if (checkpoint_dir_ && !state.state.empty()) {
      const auto dir = *checkpoint_dir_ / data_.category.id;
      std::filesystem::create_directories(dir);
      jsonl::write_all(dir / ("assister-" + role + ".adapter.jsonl"),
                       {nlohmann::json{{"backend", state.backend}, {"state", state.state}}});
    }
  }
  return *llm_assisters_.emplace(role, std::move(model)).first->second;
}

}  // namespace crsllm::experiment
