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

#include <cstdint>
#include <span>
#include <vector>

#include "crsllm/crs/backend.hpp"
#include "crsllm/crs/tokenizer.hpp"

namespace crsllm::crs {

struct TinySeq2SeqConfig {
  std::size_t embed_dim = 48;
  std::size_t context_dim = 64;
  std::size_t decoder_dim = 96;
  std::size_t max_output_tokens = 48;
  // Pointer-style bias towards tokens of the last utterance.
  bool copy_last_utterance = true;
  std::uint64_t seed = 17;
};

// Small bag-of-segments encoder with a recurrent-free decoder.
//
// Encoder: mean-pooled input embeddings over six views of the prompt (all
// tokens, the last utterance, [understand] frames, [elicit]/[recommend]
// segments, the [LLM] segment and the task prompt), concatenated and passed
// through c = tanh(W_e x + b_e).
//
// Decoder step l: h = tanh(W_d c + P[y_{l-1}] + sum_{k<l} Q[y_k] + b_d),
// logits = W_o h + b_o + g(h) m, where m marks tokens of the last utterance
// and g(h) = w_g.h + b_g is a learned copy gate.
class TinySeq2Seq final : public Seq2SeqBackend {
 public:
  explicit TinySeq2Seq(TinySeq2SeqConfig config = {});

  std::string kind() const override { return "tiny"; }
  std::size_t context_dim() const override { return config_.context_dim; }

  std::vector<double> encode(const std::string& text) const override;
  std::string generate(const std::string& text, const std::string& task_prompt) const override;
  std::vector<double> token_nll(const std::string& text, const std::string& task_prompt,
                                const std::string& target) const override;

  // Distribution over the vocabulary for the token following `prefix`.
  std::vector<double> next_token_distribution(const std::string& text, const std::string& task_prompt,
                                              const std::vector<std::string>& prefix) const;

  bool trainable() const override { return true; }
  bool needs_vocabulary() const override { return vocab_.size() <= 4; }
  void fit_vocabulary(const std::vector<std::string>& texts) override;
  std::vector<ParameterBlock> parameter_blocks() override;
  void zero_grad() override;
  double accumulate_seq2seq_gradient(const std::string& text, const std::string& task_prompt,
                                     const std::string& target, double scale) override;
  void backprop_encoding(const std::string& text, std::span<const double> grad_context) override;

  nlohmann::json save() const override;
  void load(const nlohmann::json& blob) override;

  const Vocabulary& vocabulary() const { return vocab_; }
  const TinySeq2SeqConfig& config() const { return config_; }

 private:
  static constexpr std::size_t kViews = 6;

  struct Encoding {
    std::vector<std::vector<int>> views;  // token ids per view
    std::vector<double> x;                // pooled features, kViews * embed_dim
    std::vector<double> c;                // context vector
    std::vector<double> copy_mask;        // V, 1 for last-utterance tokens
    std::vector<double> assoc;            // V, A m
  };

  struct Tensor {
    std::vector<double> value;
    std::vector<double> grad;
    void resize(std::size_t n) {
      value.assign(n, 0.0);
      grad.assign(n, 0.0);
    }
  };

  void allocate();
  void initialize();
  Encoding run_encoder(const std::string& text, const std::string& task_prompt) const;
  void encoder_backward(const Encoding& enc, std::span<const double> grad_c);
  // Fills logits for one decoder step; h receives the hidden state.
  void decoder_step(const Encoding& enc, int prev, const std::vector<double>& hist,
                    std::vector<double>& h, std::vector<double>& probs) const;

  TinySeq2SeqConfig config_;
  Vocabulary vocab_;

  Tensor emb_;     // V x E
  Tensor w_enc_;   // H x (kViews E)
  Tensor b_enc_;   // H
  Tensor w_dec_;   // D x H
  Tensor prev_;    // V x D
  Tensor hist_;    // V x D
  Tensor b_dec_;   // D
  Tensor w_out_;   // V x D
  Tensor b_out_;   // V
  Tensor copy_w_;  // D
  Tensor copy_b_;  // 1
  Tensor assoc_;   // V x V
  Tensor assoc_w_; // D
  Tensor assoc_b_; // 1
};

}  // namespace crsllm::crs
