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

#include "crsllm/experiment/runner.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>

#include "crsllm/collab/collab.hpp"
#include "crsllm/experiment/systems.hpp"
#include "crsllm/experiment/tables.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/jsonl.hpp"
#include "crsllm/util/parallel.hpp"

namespace crsllm::experiment {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using tasks::TaskKind;

Json to_json(const RunRecord& r) {
  Json j = {{"variant", r.variant},
            {"direction", r.direction},
            {"task", tasks::task_name(r.task)},
            {"category", r.category},
            {"config_hash", r.config_hash},
            {"started_at", r.started_at},
            {"finished_at", r.finished_at},
            {"seconds", r.seconds},
            {"artifacts", r.artifacts},
            {"status", r.status},
            {"deterministic", r.deterministic},
            {"template_version", r.template_version}};
  j["report"] = r.report ? eval::to_json(*r.report) : Json(nullptr);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

RunRecord record_from_json(const Json& j) {
  RunRecord r;
  r.variant = j.at("variant").get<std::string>();
  r.direction = j.value("direction", "none");
  auto task = tasks::parse_task(j.at("task").get<std::string>());
  if (!task) throw FormatError("", 0, "unknown task in run record");
  r.task = *task;
  r.category = j.at("category").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.started_at = j.value("started_at", "");
  r.finished_at = j.value("finished_at", "");
  r.seconds = j.value("seconds", 0.0);
  r.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
  r.status = j.value("status", "ok");
  r.error = j.value("error", "");
  r.deterministic = j.value("deterministic", true);
  r.template_version = j.value("template_version", "");
  if (j.contains("report") && !j.at("report").is_null()) r.report = eval::report_from_json(j.at("report"));
  return r;
}

std::vector<RunRecord> read_records(const fs::path& path) {
  std::vector<RunRecord> out;
  jsonl::for_each(path, [&](const Json& j, int line) {
    try {
      out.push_back(record_from_json(j));
    } catch (const Json::exception& e) {
      throw FormatError(path.string(), line, e.what());
    }
  });
  return out;
}

void write_records(const fs::path& path, const std::vector<RunRecord>& records) {
  std::vector<Json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  jsonl::write_all(path, rows);
}

fs::path run_directory(const ExperimentConfig& config) { return config.output_dir / config_hash(config); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

struct Cell {
  std::string category;
  TaskKind task;
  collab::Variant variant;
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void persist_cell(const fs::path& run_dir, const Cell& cell, const std::vector<tasks::TaskInstance>& test,
                  const collab::CollabResult& result, RunRecord& record) {
  const fs::path stem = fs::path(cell.category) / cell.variant.name() / tasks::task_name(cell.task);
  auto rel = [&](const std::string& top, const std::string& suffix) {
    fs::path p = fs::path(top) / stem;
    p += suffix;
    fs::create_directories((run_dir / p).parent_path());
    return p;
  };
  {
    std::vector<Json> rows;
    for (std::size_t i = 0; i < test.size(); ++i) {
      rows.push_back({{"instance", tasks::to_json(test[i])}, {"prediction", tasks::to_json(result.predictions[i])}});
    }
    const fs::path p = rel("predictions", ".jsonl");
    jsonl::write_all(run_dir / p, rows);
    record.artifacts["predictions"] = p.generic_string();
  }
  auto dump_payloads = [&](const std::vector<collab::AssistPayload>& payloads, const std::string& split) {
    if (payloads.empty()) return;
    std::vector<Json> rows;
    for (const auto& p : payloads) rows.push_back(collab::to_json(p));
    const fs::path p = rel("payloads", "." + split + ".jsonl");
    jsonl::write_all(run_dir / p, rows);
    record.artifacts["payloads_" + split] = p.generic_string();
  };
  dump_payloads(result.train_payloads, "train");
  dump_payloads(result.test_payloads, "test");
  if (result.assisted_crs && !result.assisted_crs->frozen()) {
    const fs::path p = rel("checkpoints", ".json");
    result.assisted_crs->save_checkpoint(run_dir / p);
    record.artifacts["checkpoint"] = p.generic_string();
  }
  if (result.training) {
    std::vector<Json> rows;
    for (const auto& point : result.training->curve) rows.push_back(crs::to_json(point));
    const fs::path p = rel("checkpoints", ".loss.jsonl");
    jsonl::write_all(run_dir / p, rows);
    record.artifacts["loss_curve"] = p.generic_string();
  }
}

}  // namespace

std::vector<RunRecord> run_matrix(const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  const std::string hash = config_hash(config);
  const corpus::Corpus corpus = load_corpus(config.corpus);

  std::vector<std::string> categories = config.categories;
  if (categories.empty()) {
    for (const auto& [id, c] : corpus) categories.push_back(id);
  }
  for (const auto& id : categories) {
    if (!corpus.count(id)) throw ConfigError("category '" + id + "' is not in the corpus");
  }

  std::vector<collab::Variant> variants;
  if (config.baselines) {
    for (const auto& v : collab::baseline_variants()) {
      if (config.backends.count(v.assisted)) variants.push_back(v);
    }
  }
  for (const auto& name : config.variants) variants.push_back(collab::parse_variant_name(name));

  std::vector<Cell> cells;
  for (const auto& cat : categories) {
    for (TaskKind t : config.tasks) {
      for (const auto& v : variants) cells.push_back({cat, t, v});
    }
  }

  const fs::path run_dir = run_directory(config);
  if (options.persist) {
    for (const char* sub : {"tables", "checkpoints", "payloads", "predictions", "annotations"}) {
      fs::create_directories(run_dir / sub);
    }
    write_text(run_dir / "config.json", to_json(config).dump(2) + "\n");
  }

  std::map<std::string, CategoryData> data;
  std::map<std::string, std::unique_ptr<ExperimentSystems>> systems;
  for (const auto& cat : categories) {
    data.emplace(cat, prepare_category(corpus.at(cat), config.candidate_seed, config.max_test_instances));
  }
  for (const auto& cat : categories) {
    std::optional<fs::path> ckpt;
    if (options.persist) ckpt = run_dir / "checkpoints";
    systems.emplace(cat, std::make_unique<ExperimentSystems>(config, data.at(cat), ckpt));
  }

  const std::string template_version = llm::builtin_templates(config.language).version;
  std::vector<RunRecord> records(cells.size());
  std::mutex callback_mutex;
  parallel_for(cells.size(), config.workers, [&](std::size_t i) {
    const Cell& cell = cells[i];
    RunRecord& rec = records[i];
    rec.variant = cell.variant.name();
    rec.direction = collab::direction_name(cell.variant.direction);
    rec.task = cell.task;
    rec.category = cell.category;
    rec.config_hash = hash;
    rec.template_version = template_version;
    ExperimentSystems& sys = *systems.at(cell.category);
    rec.deterministic = sys.deterministic(cell.variant.assisted) &&
                        (cell.variant.assister.empty() || sys.deterministic(cell.variant.assister));
    rec.started_at = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const CategoryData& d = data.at(cell.category);
      collab::CollabData cd;
      cd.category = d.category;
      cd.train = d.train;
      cd.test = d.test.at(cell.task);
      cd.language = config.language;
      cd.schedule = config.schedule;
      cd.gold_assist = config.gold_assist;
      cd.threads = config.threads;
      if (cd.test.empty()) throw PreconditionError("no test instances for this task");
      const collab::CollabResult result = collab::run_collaboration(cell.variant, cell.task, cd, sys);
      rec.report = eval::evaluate(cell.task, cell.category, cd.test, result.predictions);
      if (options.persist) persist_cell(run_dir, cell, cd.test, result, rec);
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
      rec.report.reset();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.finished_at = utc_timestamp();
    if (options.on_record) {
      std::lock_guard<std::mutex> lock(callback_mutex);
      options.on_record(rec);
    }
  });

  if (options.persist) {
    write_records(run_dir / "records.jsonl", records);
    for (const auto& t : emit_tables(records)) {
      write_text(run_dir / "tables" / (std::string(tasks::task_name(t.task)) + ".txt"), t.text);
      write_text(run_dir / "tables" / (std::string(tasks::task_name(t.task)) + ".csv"), t.csv);
    }
  }
  return records;
}

}  // namespace crsllm::experiment
