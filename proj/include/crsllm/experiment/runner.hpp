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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crsllm/eval/metrics.hpp"
#include "crsllm/experiment/config.hpp"
#include "json.hpp"

namespace crsllm::experiment {

struct RunRecord {
  std::string variant;  // "CLLM-BCRS" or a bare role for baselines
  std::string direction;
  tasks::TaskKind task = tasks::TaskKind::kUnderstanding;
  std::string category;
  std::optional<eval::MetricReport> report;  // absent when the cell failed
  std::string config_hash;
  std::string started_at;  // ISO 8601, UTC
  std::string finished_at;
  double seconds = 0.0;
  std::map<std::string, std::string> artifacts;  // kind -> path relative to the run directory
  std::string status = "ok";                     // "ok" or "failed"
  std::string error;
  bool deterministic = true;
  std::string template_version;
};

nlohmann::json to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);

// Current time as ISO 8601 UTC, second precision.
std::string utc_timestamp();

struct RunOptions {
  bool persist = true;  // write artifacts under output_dir/<hash>
  std::function<void(const RunRecord&)> on_record;  // called as cells finish (any thread, serialized)
};

// output_dir / config_hash(config)
std::filesystem::path run_directory(const ExperimentConfig& config);

// Baselines for each bound role (when enabled), then each variant, per task
// per category. Cells run on `workers` threads; a failing cell yields a
// "failed" record and the rest of the matrix continues. Throws ConfigError
// before any work when the configuration does not validate.
std::vector<RunRecord> run_matrix(const ExperimentConfig& config, const RunOptions& options = {});

std::vector<RunRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<RunRecord>& records);

}  // namespace crsllm::experiment
