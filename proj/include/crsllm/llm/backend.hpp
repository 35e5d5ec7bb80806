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

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "crsllm/crs/noise.hpp"
#include "crsllm/crs/optimizer.hpp"
#include "crsllm/crs/tiny_seq2seq.hpp"
#include "crsllm/llm/instruction.hpp"
#include "json.hpp"

namespace crsllm::llm {

// Whatever a backend keeps from fine-tuning, as an opaque blob.
struct AdapterState {
  std::string backend;
  nlohmann::json state;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  virtual std::string kind() const = 0;
  virtual AdapterState fine_tune(const std::vector<InstructionSample>& samples) = 0;
  virtual std::string complete(const std::string& instruction, const std::string& input) const = 0;
  // Same (instruction, input) always yields the same text.
  virtual bool deterministic() const { return true; }
  // False for hosted models used zero-shot; collaboration then skips fine_tune.
  virtual bool trainable() const { return true; }
};

// Removes a CRS-assist advisory suffix from the instruction and the CRS
// section from the input (both template languages), returning the originals.
std::pair<std::string, std::string> strip_crs_assist(const std::string& instruction, const std::string& input);

struct GoldEntry {
  tasks::TaskKind kind = tasks::TaskKind::kUnderstanding;
  std::string output;
  std::size_t candidates = 0;
};

// (instruction, input) -> gold output.
struct LlmGoldTable {
  std::map<std::string, GoldEntry> entries;

  static std::string key(const std::string& instruction, const std::string& input);
  void add(const InstructionSample& sample);
  // Throws PreconditionError for unknown samples; CRS-assist text is ignored.
  const GoldEntry& lookup(const std::string& instruction, const std::string& input) const;
  std::vector<std::string> generation_outputs() const;
};

LlmGoldTable build_llm_gold_table(const std::vector<InstructionSample>& samples);

// Gold echo; fine_tune is a no-op.
std::unique_ptr<LlmBackend> make_oracle_llm(LlmGoldTable gold);

// Gold with probability `noise.accuracy`, else a well-formed wrong answer
// (another letter for recommendation). Keyed per sample, so reruns agree.
// An empty noise.response_pool falls back to the table's responses.
std::unique_ptr<LlmBackend> make_noisy_llm(LlmGoldTable gold, crs::NoiseSpec noise);

// Repeats the CRS section of the input: the result text, or the top letter
// of a CRS ranking. Empty when there is no CRS section.
std::unique_ptr<LlmBackend> make_copy_assist_llm();

struct TinyLlmConfig {
  crs::TinySeq2SeqConfig model;
  int epochs = 10;
  std::size_t batch_size = 16;
  crs::AdamConfig adam;
  std::uint64_t seed = 5;
};

// A TinySeq2Seq trained on (instruction + input -> output).
std::unique_ptr<LlmBackend> make_tiny_llm(const TinyLlmConfig& config = {});

// OpenAI-style chat completion endpoint.
struct ExternalConfig {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string model;
  double temperature = 0.0;
  std::size_t max_concurrency = 2;
  std::size_t requests_per_minute = 60;
  std::string api_key_env = "CRSLLM_API_KEY";
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{60};
  // "{instruction}" and "{input}" are substituted.
  std::string prompt_template = "{instruction}\n\n{input}";
};

using Clock = std::function<std::chrono::steady_clock::time_point()>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

class ExternalBackend final : public LlmBackend {
 public:
  explicit ExternalBackend(ExternalConfig config, Clock clock = {}, Sleeper sleeper = {});

  std::string kind() const override { return "external"; }
  // Always throws PreconditionError: fine-tuning is not offered remotely.
  AdapterState fine_tune(const std::vector<InstructionSample>& samples) override;
  // Retries 5xx, 429 and network failures with exponential backoff, then
  // throws TransportError carrying the last status. Throws ThrottlingError
  // when the per-minute budget is spent.
  std::string complete(const std::string& instruction, const std::string& input) const override;
  bool deterministic() const override { return config_.temperature == 0.0; }
  bool trainable() const override { return false; }

  std::string render_prompt(const std::string& instruction, const std::string& input) const;

 private:
  void take_budget() const;

  ExternalConfig config_;
  std::string scheme_host_;
  std::string path_;
  Clock clock_;
  Sleeper sleeper_;
  mutable std::counting_semaphore<1024> slots_;
  mutable std::mutex budget_mutex_;
  mutable std::vector<std::chrono::steady_clock::time_point> window_;
};

}  // namespace crsllm::llm
