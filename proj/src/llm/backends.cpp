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

#include <algorithm>
#include <random>
#include <regex>
#include <thread>

#include "crsllm/crs/tokenizer.hpp"
#include "crsllm/llm/backend.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"
#include "crsllm/util/text.hpp"
#include "httplib.h"

namespace crsllm::llm {

using Json = nlohmann::json;
using tasks::TaskKind;

std::pair<std::string, std::string> strip_crs_assist(const std::string& instruction, const std::string& input) {
  std::string ins = instruction, in = input;
  for (Language l : {Language::kEn, Language::kZh}) {
    const std::string suffix = " " + builtin_templates(l).crs_assist.advisory;
    if (text::ends_with(ins, suffix)) ins.resize(ins.size() - suffix.size());
  }
  const auto pos = in.rfind("\n[CRS");
  if (pos != std::string::npos) in.resize(pos);
  return {ins, in};
}

std::string LlmGoldTable::key(const std::string& instruction, const std::string& input) {
  return instruction + '\x1f' + input;
}

void LlmGoldTable::add(const InstructionSample& s) {
  entries[key(s.instruction, s.input)] = {s.kind, s.output, s.candidates.size()};
}

const GoldEntry& LlmGoldTable::lookup(const std::string& instruction, const std::string& input) const {
  auto [ins, in] = strip_crs_assist(instruction, input);
  auto it = entries.find(key(ins, in));
  if (it == entries.end()) throw PreconditionError("oracle has no gold output for this sample");
  return it->second;
}

std::vector<std::string> LlmGoldTable::generation_outputs() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries) {
    if (e.kind == TaskKind::kGeneration) out.push_back(e.output);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LlmGoldTable build_llm_gold_table(const std::vector<InstructionSample>& samples) {
  LlmGoldTable t;
  for (const auto& s : samples) t.add(s);
  return t;
}

namespace {

class OracleLlm final : public LlmBackend {
 public:
  OracleLlm(LlmGoldTable gold, std::optional<crs::NoiseSpec> noise) : gold_(std::move(gold)), noise_(std::move(noise)) {
    if (noise_ && noise_->response_pool.empty()) noise_->response_pool = gold_.generation_outputs();
  }

  std::string kind() const override { return noise_ ? "noisy_oracle" : "oracle"; }
  AdapterState fine_tune(const std::vector<InstructionSample>& samples) override {
    return {kind(), {{"samples", samples.size()}}};
  }

  std::string complete(const std::string& instruction, const std::string& input) const override {
    const GoldEntry& e = gold_.lookup(instruction, input);
    if (!noise_) return e.output;
    auto [ins, in] = strip_crs_assist(instruction, input);
    const std::string k = LlmGoldTable::key(ins, in);
    if (crs::noise_keeps_gold(noise_->accuracy, noise_->seed, k)) return e.output;
    if (e.kind == TaskKind::kRecommendation) {
      return std::string(1, crs::wrong_letter(e.output.at(0), e.candidates, noise_->seed, k));
    }
    return crs::wrong_output(e.kind, e.output, *noise_, k);
  }

 private:
  LlmGoldTable gold_;
  std::optional<crs::NoiseSpec> noise_;
};

class CopyAssistLlm final : public LlmBackend {
 public:
  std::string kind() const override { return "copy_assist"; }
  AdapterState fine_tune(const std::vector<InstructionSample>&) override { return {kind(), Json::object()}; }

  std::string complete(const std::string&, const std::string& input) const override {
    for (Language l : {Language::kEn, Language::kZh}) {
      const CrsAssistStrings& s = builtin_templates(l).crs_assist;
      if (auto pos = input.rfind(s.result); pos != std::string::npos) {
        const std::string body = input.substr(pos + s.result.size());
        return body == s.no_result ? std::string() : body;
      }
      if (auto pos = input.rfind(s.ranking); pos != std::string::npos) {
        const std::string body = input.substr(pos + s.ranking.size());
        return body == s.no_result ? std::string() : text::trim(body.substr(0, body.find(',')));
      }
    }
    return "";
  }
};

class TinyLlm final : public LlmBackend {
 public:
  explicit TinyLlm(TinyLlmConfig config) : config_(std::move(config)), model_(config_.model) {}

  std::string kind() const override { return "tiny"; }

  AdapterState fine_tune(const std::vector<InstructionSample>& samples) override {
    if (samples.empty()) throw PreconditionError("tiny LLM fine-tuning needs samples");
    if (model_.needs_vocabulary()) {
      std::vector<std::string> texts;
      for (const auto& s : samples) {
        texts.push_back(s.instruction);
        texts.push_back(s.input);
        texts.push_back(s.output);
      }
      model_.fit_vocabulary(texts);
    }
    crs::Adam adam(config_.adam);
    std::mt19937_64 rng(derive_seed(config_.seed, {"tiny_llm"}));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> losses;
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
        const std::size_t end = std::min(order.size(), start + config_.batch_size);
        model_.zero_grad();
        for (std::size_t k = start; k < end; ++k) {
          const InstructionSample& s = samples[order[k]];
          sum += model_.accumulate_seq2seq_gradient(s.input, s.instruction, s.output,
                                                    1.0 / static_cast<double>(end - start));
        }
        adam.step(model_.parameter_blocks());
      }
      losses.push_back(sum / static_cast<double>(samples.size()));
    }
    return {kind(), {{"epochs", config_.epochs}, {"loss", losses}}};
  }

  std::string complete(const std::string& instruction, const std::string& input) const override {
    return model_.generate(input, instruction);
  }

 private:
  TinyLlmConfig config_;
  crs::TinySeq2Seq model_;
};

}  // namespace

std::unique_ptr<LlmBackend> make_oracle_llm(LlmGoldTable gold) {
  return std::make_unique<OracleLlm>(std::move(gold), std::nullopt);
}

std::unique_ptr<LlmBackend> make_noisy_llm(LlmGoldTable gold, crs::NoiseSpec noise) {
  if (noise.accuracy < 0.0 || noise.accuracy > 1.0) throw PreconditionError("accuracy must lie in [0, 1]");
  return std::make_unique<OracleLlm>(std::move(gold), std::move(noise));
}

std::unique_ptr<LlmBackend> make_copy_assist_llm() { return std::make_unique<CopyAssistLlm>(); }

std::unique_ptr<LlmBackend> make_tiny_llm(const TinyLlmConfig& config) { return std::make_unique<TinyLlm>(config); }

// ---------------------------------------------------------------- external

ExternalBackend::ExternalBackend(ExternalConfig config, Clock clock, Sleeper sleeper)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_concurrency, 1, 1024))) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url)) {
    throw ConfigError("external endpoint must look like http(s)://host[:port]/path, got '" + config_.endpoint + "'");
  }
  scheme_host_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (config_.max_concurrency == 0 || config_.max_concurrency > 1024) {
    throw ConfigError("max_concurrency must lie in [1, 1024]");
  }
  if (config_.requests_per_minute == 0) throw ConfigError("requests_per_minute must be positive");
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
}

AdapterState ExternalBackend::fine_tune(const std::vector<InstructionSample>&) {
  throw PreconditionError("the external backend does not support fine-tuning");
}

std::string ExternalBackend::render_prompt(const std::string& instruction, const std::string& input) const {
  return text::substitute(text::substitute(config_.prompt_template, "instruction", instruction), "input", input);
}

void ExternalBackend::take_budget() const {
  std::lock_guard<std::mutex> lock(budget_mutex_);
  const auto now = clock_();
  const auto horizon = now - std::chrono::seconds(60);
  window_.erase(std::remove_if(window_.begin(), window_.end(), [&](auto t) { return t <= horizon; }), window_.end());
  if (window_.size() >= config_.requests_per_minute) {
    throw ThrottlingError("request budget of " + std::to_string(config_.requests_per_minute) +
                          " per minute is exhausted");
  }
  window_.push_back(now);
}

namespace {

std::string extract_content(const std::string& body) {
  const Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) throw TransportError(200, "response body is not JSON");
  if (j.contains("choices") && !j["choices"].empty()) {
    const Json& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content")) return c["message"]["content"].get<std::string>();
    if (c.contains("text")) return c["text"].get<std::string>();
  }
  if (j.contains("output")) return j["output"].get<std::string>();
  throw TransportError(200, "response has no completion text");
}

}  // namespace

std::string ExternalBackend::complete(const std::string& instruction, const std::string& input) const {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  const Json body = {{"model", config_.model},
                     {"temperature", config_.temperature},
                     {"messages", Json::array({{{"role", "user"}, {"content", render_prompt(instruction, input)}}})}};
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  int status = 0;
  std::string last;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    take_budget();
    httplib::Client cli(scheme_host_);
    cli.set_connection_timeout(config_.timeout);
    cli.set_read_timeout(config_.timeout);
    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      status = 0;
      last = httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      return extract_content(res->body);
    } else if (res->status >= 500 || res->status == 429) {
      status = res->status;
      last = "HTTP " + std::to_string(res->status);
    } else {
      throw TransportError(res->status, "request rejected with HTTP " + std::to_string(res->status));
    }
    if (attempt < config_.max_attempts) sleeper_(config_.initial_backoff * (1 << (attempt - 1)));
  }
  throw TransportError(status, "request failed after " + std::to_string(config_.max_attempts) + " attempts: " + last);
}

}  // namespace crsllm::llm
