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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crsllm/collab/collab.hpp"
#include "crsllm/crs/oracle.hpp"
#include "crsllm/experiment/config.hpp"
#include "crsllm/llm/backend.hpp"

namespace crsllm::experiment {

// Task instances of one category. Recommendation instances carry their
// 20 sampled candidates.
struct CategoryData {
  corpus::Category category;
  corpus::Catalog catalog;
  std::vector<tasks::TaskInstance> train;                       // all tasks
  std::map<tasks::TaskKind, std::vector<tasks::TaskInstance>> test;  // per task
};

// `max_test` > 0 keeps the first max_test test instances of each task.
CategoryData prepare_category(const corpus::CategoryCorpus& data, std::uint64_t candidate_seed,
                              std::size_t max_test = 0);

// Builds systems for one category from the role bindings. Oracles and noisy
// oracles answer from gold tables over the train and test instances.
// Assisters are trained once on unaugmented data, frozen and cached; calls
// for the same role wait for each other.
class ExperimentSystems final : public collab::SystemProvider {
 public:
  ExperimentSystems(const ExperimentConfig& config, const CategoryData& data,
                    std::optional<std::filesystem::path> checkpoint_dir = std::nullopt);

  const crs::UnifiedCrs& assister_crs(const std::string& role) override;
  const llm::LlmBackend& assister_llm(const std::string& role) override;
  std::unique_ptr<crs::UnifiedCrs> fresh_crs(const std::string& role) override;
  std::unique_ptr<llm::LlmBackend> fresh_llm(const std::string& role) override;

  // True unless the role is bound to a sampling external model.
  bool deterministic(const std::string& role) const;

 private:
  const BackendBinding& binding(const std::string& role, collab::SystemType type) const;
  std::mutex& role_mutex(const std::string& role);

  const ExperimentConfig& config_;
  const CategoryData& data_;
  std::optional<std::filesystem::path> checkpoint_dir_;
  crs::CrsGoldTable crs_gold_;
  llm::LlmGoldTable llm_gold_;
  std::vector<std::string> responses_;

  std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> role_mutexes_;
  std::map<std::string, std::unique_ptr<crs::UnifiedCrs>> crs_assisters_;
  std::map<std::string, std::unique_ptr<llm::LlmBackend>> llm_assisters_;
};

}  // namespace crsllm::experiment
