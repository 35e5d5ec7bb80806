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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crsllm/corpus/synthetic.hpp"
#include "crsllm/corpus/types.hpp"
#include "crsllm/crs/oracle.hpp"
#include "crsllm/crs/training.hpp"
#include "crsllm/eval/metrics.hpp"
#include "crsllm/llm/backend.hpp"
#include "crsllm/llm/templates.hpp"
#include "crsllm/tasks/task.hpp"
#include "json.hpp"

namespace crsllm::experiment {

enum class BackendKind { kOracle, kNoisy, kCopyAssist, kTiny, kExternal };
const char* backend_kind_name(BackendKind k);
std::optional<BackendKind> parse_backend_kind(const std::string& name);

// What plays one role (CLLM, ALLM, BCRS, CCRS).
struct BackendBinding {
  BackendKind kind = BackendKind::kOracle;
  double accuracy = 1.0;   // noisy only
  std::uint64_t seed = 0;  // noisy only
  crs::TinyCrsConfig tiny_crs;
  llm::TinyLlmConfig tiny_llm;
  llm::ExternalConfig external;  // LLM roles only
};

struct CorpusSource {
  std::string kind = "synthetic";  // or "uneed"
  std::filesystem::path path;      // uneed only
  corpus::SyntheticSpec synthetic;
};

struct ExperimentConfig {
  CorpusSource corpus;
  std::map<std::string, BackendBinding> backends;  // role -> binding
  std::vector<std::string> variants;               // collaboration variant names
  bool baselines = true;                           // a single-system run per bound role
  std::vector<tasks::TaskKind> tasks;
  std::vector<std::string> categories;  // empty means every category of the corpus
  crs::Schedule schedule;
  std::uint64_t candidate_seed = 11;
  eval::Aggregation aggregation = eval::Aggregation::kMacro;
  llm::Language language = llm::Language::kEn;
  bool gold_assist = false;
  std::size_t max_test_instances = 0;  // per task and category; 0 keeps all
  std::size_t workers = 1;             // matrix cells in flight
  std::size_t threads = 1;             // instance-level parallelism inside a cell
  std::filesystem::path output_dir = "runs";
  std::size_t annotation_sample = 100;
  std::uint64_t annotation_seed = 13;
};

// Everything defaulted: synthetic corpus with one category, oracle backends
// for all four roles, all eight variants and all four tasks.
ExperimentConfig default_config();

nlohmann::json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults. Throws ConfigError on unknown names.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// SHA-256 over the canonical JSON of the fields that influence results
// (output_dir, workers and threads are excluded).
std::string config_hash(const ExperimentConfig& config);

// Throws ConfigError when a variant or baseline names an unbound role, a
// binding does not fit its role, or a list holds unknown names.
void validate(const ExperimentConfig& config);

corpus::Corpus load_corpus(const CorpusSource& source);

}  // namespace crsllm::experiment
