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

#include "crsllm/util/text.hpp"

#include <cctype>

namespace crsllm::text {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  if (sep.empty()) {
    out.emplace_back(s);
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::string normalize_punctuation(std::string_view s) {
  static constexpr std::string_view kFullColon = "\xEF\xBC\x9A";      // U+FF1A
  static constexpr std::string_view kFullSemicolon = "\xEF\xBC\x9B";  // U+FF1B
  static constexpr std::string_view kFullComma = "\xEF\xBC\x8C";      // U+FF0C
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const std::string_view rest = s.substr(i);
    if (starts_with(rest, kFullColon)) {
      out += ':';
      i += kFullColon.size();
    } else if (starts_with(rest, kFullSemicolon)) {
      out += ';';
      i += kFullSemicolon.size();
    } else if (starts_with(rest, kFullComma)) {
      out += ',';
      i += kFullComma.size();
    } else if (s[i] == '\r' || s[i] == '\n' || s[i] == '\t') {
      out += ' ';
      ++i;
    } else {
      out += s[i];
      ++i;
    }
  }
  return out;
}

std::string substitute(std::string_view tmpl, std::string_view key,
                       std::string_view value) {
  const std::string needle = "{" + std::string(key) + "}";
  std::string out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = tmpl.find(needle, start);
    if (pos == std::string_view::npos) {
      out.append(tmpl.substr(start));
      return out;
    }
    out.append(tmpl.substr(start, pos - start));
    out.append(value);
    start = pos + needle.size();
  }
}

bool has_word_character(std::string_view s) {
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) return true;
  }
  return false;
}

}  // namespace crsllm::text
