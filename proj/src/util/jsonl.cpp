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

#include "crsllm/util/jsonl.hpp"

#include <fstream>

#include "crsllm/util/error.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::jsonl {

void for_each(const std::filesystem::path& path,
              const std::function<void(const Json&, int)>& fn) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Json row;
    try {
      row = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(path.string(), line_no,
                        std::string("malformed record: ") + e.what());
    }
    fn(row, line_no);
  }
}

std::vector<Json> read_all(const std::filesystem::path& path) {
  std::vector<Json> rows;
  for_each(path, [&](const Json& row, int) { rows.push_back(row); });
  return rows;
}

void write_all(const std::filesystem::path& path, const std::vector<Json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& row : rows) out << row.dump() << '\n';
}

void append(const std::filesystem::path& path, const Json& row) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out << row.dump() << '\n';
  out.flush();
}

}  // namespace crsllm::jsonl
