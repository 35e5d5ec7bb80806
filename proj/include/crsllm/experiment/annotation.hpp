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
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crsllm/eval/metrics.hpp"
#include "crsllm/tasks/prediction.hpp"
#include "crsllm/tasks/task.hpp"
#include "crsllm/util/error.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace crsllm::experiment {

struct ContextTurn {
  std::string role;
  std::string text;
};

// One response to score. method_id never leaves the server.
struct AnnotationItem {
  std::string item_id;  // opaque
  std::string method_id;
  std::string dialogue_id;
  std::vector<ContextTurn> context;
  std::string response;
  std::string ground_truth;
};

struct GenerationOutput {
  tasks::TaskInstance instance;
  tasks::Prediction prediction;
};

// method -> its generation outputs.
using GenerationDumps = std::map<std::string, std::vector<GenerationOutput>>;

// Generation prediction dumps of every successful cell in a run directory.
GenerationDumps load_generation_dumps(const std::filesystem::path& run_dir);

// Draws `sample_size` dialogues (seeded) among those every method answered,
// picks one system turn per dialogue, and emits one item per (dialogue,
// method). Throws PreconditionError when there are no methods.
std::vector<AnnotationItem> build_annotation_items(const GenerationDumps& dumps, std::size_t sample_size,
                                                   std::uint64_t seed);

// Append-only line-delimited store; a second record with the same
// (annotator, method, dialogue) key is ignored.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path path);

  // True when the record was new.
  bool submit(const eval::AnnotationRecord& record);
  bool contains(const std::string& key) const;
  std::vector<eval::AnnotationRecord> records() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<eval::AnnotationRecord> records_;
  std::set<std::string> keys_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

struct Progress {
  std::size_t scored = 0;
  std::size_t total = 0;
};

// Server-side state behind the annotation endpoints. Every annotator sees
// all items in a stable, annotator-specific shuffled order.
class AnnotationService {
 public:
  AnnotationService(std::vector<AnnotationItem> items, const std::filesystem::path& store_dir, std::uint64_t seed);

  void register_annotator(const std::string& annotator_id);
  bool is_registered(const std::string& annotator_id) const;

  // Blinded view of the next unscored item, or nullopt when done. Throws
  // NotFoundError for unknown annotators.
  std::optional<nlohmann::json> next(const std::string& annotator_id) const;
  // Returns true when stored, false for a duplicate. Throws ValidationError
  // for scores outside 1..5 and NotFoundError for unknown annotators/items.
  bool submit(const std::string& annotator_id, const std::string& item_id, int informativeness, int relevance);
  Progress progress(const std::string& annotator_id) const;

  std::vector<eval::AnnotationRecord> export_records() const { return store_.records(); }
  std::map<std::string, eval::HumanScores> aggregate() const;
  std::vector<std::string> methods() const;
  std::size_t item_count() const { return items_.size(); }

  // Throws Error when `payload` mentions any method id.
  void assert_blinded(const std::string& payload) const;

 private:
  std::vector<std::size_t> queue(const std::string& annotator_id) const;
  std::string record_key(const std::string& annotator_id, const AnnotationItem& item) const;

  std::vector<AnnotationItem> items_;
  std::map<std::string, std::size_t> by_id_;
  std::uint64_t seed_;
  AnnotationStore store_;
  std::filesystem::path annotators_path_;
  mutable std::mutex mutex_;
  std::set<std::string> annotators_;
};

// Routes (JSON bodies and responses):
//   POST /api/register   {"annotator_id"}                -> {"annotator_id","progress"}
//   GET  /api/next?annotator_id=..                        -> {"done","item"?,"progress"}
//   POST /api/submit     {"annotator_id","item_id","informativeness","relevance"}
//                                                         -> {"stored","progress"}
//   GET  /api/progress?annotator_id=..                    -> {"scored","total"}
//   GET  /api/export                                      -> line-delimited records
//   GET  /api/aggregate                                   -> {method: {"informativeness","relevance","records"}}
// Errors: 400 invalid input, 404 unknown annotator or item, as {"error"}.
void mount_annotation_routes(httplib::Server& server, AnnotationService& service);

}  // namespace crsllm::experiment
