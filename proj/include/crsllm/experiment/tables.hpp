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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crsllm/eval/metrics.hpp"
#include "crsllm/experiment/runner.hpp"

namespace crsllm::experiment {

struct TableRow {
  std::string section;  // "No collaboration", "LLM assisting CRS" or "CRS assisting LLM"
  std::string method;
  std::vector<std::optional<double>> cells;
  std::vector<bool> best;
};

struct Column {
  std::string group;  // category id, "All (macro)", "All (micro)" or "Human"
  std::string metric;
};

// Categories in id order, each with the task's metrics, then the two "All"
// groups when there is more than one category.
struct Table {
  tasks::TaskKind task = tasks::TaskKind::kUnderstanding;
  std::vector<Column> columns;
  std::vector<TableRow> rows;
};

// One table per task present in `records`. Failed cells stay empty. Human
// scores, keyed by method, add a "Human" group to the generation table.
std::vector<Table> build_tables(const std::vector<RunRecord>& records,
                                const std::map<std::string, eval::HumanScores>& human = {});

// Best values carry a trailing '*'; empty cells print as '-'.
std::string render_text(const Table& table);
std::string render_csv(const Table& table);

struct FormattedTable {
  tasks::TaskKind task = tasks::TaskKind::kUnderstanding;
  std::string text;
  std::string csv;
};

std::vector<FormattedTable> emit_tables(const std::vector<RunRecord>& records,
                                        const std::map<std::string, eval::HumanScores>& human = {});

}  // namespace crsllm::experiment
