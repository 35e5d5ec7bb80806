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
#include <string>
#include <vector>

#include "json.hpp"

namespace crsllm::jsonl {

using Json = nlohmann::json;

// Calls `fn(record, line_number)` for every non-blank line. Throws
// FormatError naming the file and line when a line is not valid JSON.
void for_each(const std::filesystem::path& path,
              const std::function<void(const Json&, int)>& fn);

std::vector<Json> read_all(const std::filesystem::path& path);

void write_all(const std::filesystem::path& path, const std::vector<Json>& rows);

// Appends one record and flushes.
void append(const std::filesystem::path& path, const Json& row);

}  // namespace crsllm::jsonl
