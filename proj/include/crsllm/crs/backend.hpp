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

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace crsllm::crs {

// A trainable parameter tensor and its gradient buffer, both flat.
struct ParameterBlock {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

// Encoder/decoder behind the unified CRS. Implementations either learn
// (TinySeq2Seq) or are fixed test doubles (oracles).
class Seq2SeqBackend {
 public:
  virtual ~Seq2SeqBackend() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t context_dim() const = 0;

  // Context vector Enc(text).
  virtual std::vector<double> encode(const std::string& text) const = 0;
  // Greedy decoding; deterministic for fixed parameters.
  virtual std::string generate(const std::string& text, const std::string& task_prompt) const = 0;
  // Teacher-forced per-token negative log-likelihood of tokenize(target)
  // followed by the end-of-sequence token.
  virtual std::vector<double> token_nll(const std::string& text, const std::string& task_prompt,
                                        const std::string& target) const = 0;

  // Whether encode/generate may be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }

  virtual bool trainable() const { return false; }
  // True while the backend has no vocabulary; training fits one first.
  virtual bool needs_vocabulary() const { return false; }
  virtual void fit_vocabulary(const std::vector<std::string>& /*texts*/) {}
  virtual std::vector<ParameterBlock> parameter_blocks() { return {}; }
  virtual void zero_grad() {}
  // Adds scale * d(mean NLL)/d(params) to the gradients; returns the mean NLL.
  virtual double accumulate_seq2seq_gradient(const std::string& text, const std::string& task_prompt,
                                             const std::string& target, double scale);
  // Adds the gradient flowing into Enc(text) from the recommendation head.
  virtual void backprop_encoding(const std::string& text, std::span<const double> grad_context);

  virtual nlohmann::json save() const = 0;
  virtual void load(const nlohmann::json& blob) = 0;
};

}  // namespace crsllm::crs
