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

#include <string>
#include <string_view>
#include <vector>

namespace crsllm::text {

std::string trim(std::string_view s);

// Splits on every occurrence of `sep`; keeps empty pieces.
std::vector<std::string> split(std::string_view s, std::string_view sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// Maps full-width colon/semicolon/comma to ASCII and collapses CR/LF/TAB to a
// single space.
std::string normalize_punctuation(std::string_view s);

// Replaces every `{key}` occurrence with `value`.
std::string substitute(std::string_view tmpl, std::string_view key,
                       std::string_view value);

// True if `s` contains at least one ASCII alphanumeric or any non-ASCII byte.
bool has_word_character(std::string_view s);

}  // namespace crsllm::text
