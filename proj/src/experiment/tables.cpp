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

#include "crsllm/experiment/tables.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "crsllm/collab/collab.hpp"
#include "crsllm/util/error.hpp"

namespace crsllm::experiment {

using tasks::TaskKind;

namespace {

const char* kSections[] = {"No collaboration", "LLM assisting CRS", "CRS assisting LLM"};

std::string section_of(const RunRecord& r) {
  if (r.direction == collab::direction_name(collab::Direction::kLlmAssistsCrs)) return kSections[1];
  if (r.direction == collab::direction_name(collab::Direction::kCrsAssistsLlm)) return kSections[2];
  return kSections[0];
}

std::string cell_text(const TableRow& row, std::size_t c) {
  if (!row.cells[c]) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *row.cells[c]);
  return std::string(buf) + (row.best[c] ? "*" : "");
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

std::optional<double> value_of(const std::optional<eval::MetricReport>& r, const std::string& metric) {
  if (!r) return std::nullopt;
  auto it = r->values.find(metric);
  if (it == r->values.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::vector<Table> build_tables(const std::vector<RunRecord>& records,
                                const std::map<std::string, eval::HumanScores>& human) {
  std::vector<Table> out;
  for (TaskKind kind : tasks::kAllTasks) {
    std::vector<const RunRecord*> mine;
    for (const auto& r : records) {
      if (r.task == kind) mine.push_back(&r);
    }
    if (mine.empty()) continue;

    std::set<std::string> categories, present;
    for (const auto* r : mine) {
      categories.insert(r->category);
      if (r->report) {
        for (const auto& [m, v] : r->report->values) present.insert(m);
      }
    }
    std::vector<std::string> metrics;
    for (const auto& m : eval::metric_names(kind)) {
      if (present.count(m)) metrics.push_back(m);
    }
    for (const auto& m : present) {  // e.g. a non-default K
      if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);
    }
    if (metrics.empty()) metrics = eval::metric_names(kind);

    Table t;
    t.task = kind;
    std::vector<std::string> groups(categories.begin(), categories.end());
    const bool with_all = categories.size() > 1;
    if (with_all) {
      groups.push_back("All (macro)");
      groups.push_back("All (micro)");
    }
    for (const auto& g : groups) {
      for (const auto& m : metrics) t.columns.push_back({g, m});
    }
    const bool with_human = kind == TaskKind::kGeneration && !human.empty();
    if (with_human) {
      t.columns.push_back({"Human", "Info."});
      t.columns.push_back({"Human", "Rel."});
    }

    std::vector<std::pair<std::string, std::string>> methods;  // (section, method)
    for (const char* section : kSections) {
      for (const auto* r : mine) {
        std::pair<std::string, std::string> key{section, r->variant};
        if (section_of(*r) == section && std::find(methods.begin(), methods.end(), key) == methods.end()) {
          methods.push_back(key);
        }
      }
    }

    for (const auto& [section, method] : methods) {
      TableRow row;
      row.section = section;
      row.method = method;
      std::vector<eval::MetricReport> per_category;
      for (const auto& cat : categories) {
        const RunRecord* found = nullptr;
        for (const auto* r : mine) {
          if (r->variant == method && r->category == cat) found = r;
        }
        for (const auto& m : metrics) row.cells.push_back(found ? value_of(found->report, m) : std::nullopt);
        if (found && found->report) per_category.push_back(*found->report);
      }
      if (with_all) {
        for (auto mode : {eval::Aggregation::kMacro, eval::Aggregation::kMicro}) {
          std::optional<eval::MetricReport> all;
          if (per_category.size() == categories.size()) {
            try {
              all = eval::aggregate_categories(per_category, mode);
            } catch (const PreconditionError&) {
              // metric sets differ across categories; leave the aggregate empty
            }
          }
          for (const auto& m : metrics) row.cells.push_back(value_of(all, m));
        }
      }
      if (with_human) {
        auto it = human.find(method);
        row.cells.push_back(it == human.end() ? std::nullopt : std::optional<double>(it->second.informativeness));
        row.cells.push_back(it == human.end() ? std::nullopt : std::optional<double>(it->second.relevance));
      }
      t.rows.push_back(std::move(row));
    }

    // Best per column; ties share the mark.
    for (auto& row : t.rows) row.best.assign(row.cells.size(), false);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      std::optional<double> best;
      for (const auto& row : t.rows) {
        if (row.cells[c] && (!best || *row.cells[c] > *best)) best = row.cells[c];
      }
      if (!best) continue;
      for (auto& row : t.rows) row.best[c] = row.cells[c] && *row.cells[c] == *best;
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string render_text(const Table& t) {
  const std::size_t cols = t.columns.size();
  auto starts_group = [&](std::size_t c) { return c == 0 || t.columns[c].group != t.columns[c - 1].group; };
  std::size_t first = std::string("Method").size();
  for (const auto& row : t.rows) first = std::max(first, row.method.size() + 2);
  for (const char* s : kSections) first = std::max(first, std::string(s).size());

  std::vector<std::size_t> width(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    width[c] = std::max<std::size_t>(t.columns[c].metric.size(), 6);
    for (const auto& row : t.rows) width[c] = std::max(width[c], cell_text(row, c).size());
  }
  // Widen the last column of a group whose label is longer than its columns.
  for (std::size_t c = 0; c < cols;) {
    std::size_t end = c + 1, span = width[c];
    while (end < cols && !starts_group(end)) span += 2 + width[end++];
    if (span < t.columns[c].group.size()) width[end - 1] += t.columns[c].group.size() - span;
    c = end;
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  auto rstrip = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };

  std::ostringstream out;
  out << "Task: " << tasks::task_name(t.task) << "\n";
  std::string names = pad("Method", first);
  for (std::size_t c = 0; c < cols; ++c) names += (starts_group(c) ? " | " : "  ") + pad(t.columns[c].metric, width[c]);
  std::string g = pad("", first);
  for (std::size_t c = 0; c < cols;) {
    std::size_t end = c + 1, span = width[c];
    while (end < cols && !starts_group(end)) span += 2 + width[end++];
    g += " | " + pad(t.columns[c].group, span);
    c = end;
  }
  out << rstrip(g) << "\n" << rstrip(names) << "\n" << std::string(rstrip(names).size(), '-') << "\n";
  std::string section;
  for (const auto& row : t.rows) {
    if (row.section != section) {
      section = row.section;
      out << section << "\n";
    }
    std::string line = pad("  " + row.method, first);
    for (std::size_t c = 0; c < cols; ++c) line += (starts_group(c) ? " | " : "  ") + pad(cell_text(row, c), width[c]);
    out << rstrip(line) << "\n";
  }
  return out.str();
}

std::string render_csv(const Table& t) {
  std::ostringstream out;
  out << "task,section,method";
  for (const auto& c : t.columns) out << "," << csv_escape(c.group + " " + c.metric);
  out << "\n";
  for (const auto& row : t.rows) {
    out << tasks::task_name(t.task) << "," << csv_escape(row.section) << "," << csv_escape(row.method);
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << "," << (row.cells[c] ? cell_text(row, c) : "");
    out << "\n";
  }
  return out.str();
}

std::vector<FormattedTable> emit_tables(const std::vector<RunRecord>& records,
                                        const std::map<std::string, eval::HumanScores>& human) {
  std::vector<FormattedTable> out;
  for (const auto& t : build_tables(records, human)) out.push_back({t.task, render_text(t), render_csv(t)});
  return out;
}

}  // namespace crsllm::experiment
