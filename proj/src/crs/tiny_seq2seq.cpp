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

#include "crsllm/crs/tiny_seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crsllm/simd/kernels.hpp"
#include "crsllm/util/error.hpp"

namespace crsllm::crs {

namespace {

enum View : std::size_t { kAll = 0, kLast, kFrames, kLabels, kLlm, kPrompt };

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

void fill_uniform(std::vector<double>& v, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-scale, scale);
  for (double& x : v) x = d(rng);
}

}  // namespace

TinySeq2Seq::TinySeq2Seq(TinySeq2SeqConfig config) : config_(config) {
  allocate();
  initialize();
}

void TinySeq2Seq::allocate() {
  const std::size_t v = vocab_.size(), e = config_.embed_dim, h = config_.context_dim, d = config_.decoder_dim;
  emb_.resize(v * e);
  w_enc_.resize(h * kViews * e);
  b_enc_.resize(h);
  w_dec_.resize(d * h);
  prev_.resize(v * d);
  hist_.resize(v * d);
  b_dec_.resize(d);
  w_out_.resize(v * d);
  b_out_.resize(v);
  copy_w_.resize(d);
  copy_b_.resize(1);
  assoc_.resize(v * v);
  assoc_w_.resize(d);
  assoc_b_.resize(1);
}

void TinySeq2Seq::initialize() {
  std::mt19937_64 rng(config_.seed);
  fill_uniform(emb_.value, 0.5, rng);
  fill_uniform(w_enc_.value, 1.0 / std::sqrt(static_cast<double>(kViews * config_.embed_dim)) * std::sqrt(3.0), rng);
  fill_uniform(w_dec_.value, std::sqrt(3.0 / static_cast<double>(config_.context_dim)), rng);
  fill_uniform(prev_.value, 0.1, rng);
  fill_uniform(hist_.value, 0.1, rng);
  fill_uniform(w_out_.value, std::sqrt(3.0 / static_cast<double>(config_.decoder_dim)), rng);
  assoc_b_.value[0] = 1.0;  // A starts at zero, so the gate must not
}

void TinySeq2Seq::fit_vocabulary(const std::vector<std::string>& texts) {
  vocab_.fit(texts);
  allocate();
  initialize();
}

std::vector<ParameterBlock> TinySeq2Seq::parameter_blocks() {
  auto block = [](const char* name, Tensor& t) { return ParameterBlock{name, t.value, t.grad}; };
  return {block("embedding", emb_),  block("w_enc", w_enc_), block("b_enc", b_enc_),
          block("w_dec", w_dec_),    block("prev", prev_),   block("hist", hist_),
          block("b_dec", b_dec_),    block("w_out", w_out_), block("b_out", b_out_),
          block("copy_w", copy_w_),  block("copy_b", copy_b_), block("assoc", assoc_),
          block("assoc_w", assoc_w_), block("assoc_b", assoc_b_)};
}

void TinySeq2Seq::zero_grad() {
  for (Tensor* t : {&emb_, &w_enc_, &b_enc_, &w_dec_, &prev_, &hist_, &b_dec_, &w_out_, &b_out_, &copy_w_, &copy_b_, &assoc_, &assoc_w_, &assoc_b_}) {
    std::fill(t->grad.begin(), t->grad.end(), 0.0);
  }
}

TinySeq2Seq::Encoding TinySeq2Seq::run_encoder(const std::string& text, const std::string& task_prompt) const {
  Encoding enc;
  enc.views.resize(kViews);
  std::size_t mode = kLast;
  for (const std::string& tok : tokenize(text)) {
    const int id = vocab_.id(tok);
    enc.views[kAll].push_back(id);
    if (tok == "[user]" || tok == "[system]" || tok == "[SEP]") {
      enc.views[kLast].clear();
      mode = kLast;
    } else if (tok == "[understand]") {
      mode = kFrames;
    } else if (tok == "[elicit]" || tok == "[recommend]") {
      mode = kLabels;
    } else if (tok == "[LLM]") {
      mode = kLlm;
    } else {
      enc.views[mode].push_back(id);
    }
  }
  for (const std::string& tok : tokenize(task_prompt)) enc.views[kPrompt].push_back(vocab_.id(tok));
  enc.copy_mask.assign(vocab_.size(), 0.0);
  if (config_.copy_last_utterance) {
    for (int id : enc.views[kLast]) {
      if (id != Vocabulary::kUnk) enc.copy_mask[static_cast<std::size_t>(id)] = 1.0;
    }
    enc.assoc.assign(vocab_.size(), 0.0);
    simd::active().gemv(assoc_.value.data(), vocab_.size(), vocab_.size(), enc.copy_mask.data(), enc.assoc.data());
  }

  const std::size_t e = config_.embed_dim, h = config_.context_dim;
  enc.x.assign(kViews * e, 0.0);
  for (std::size_t v = 0; v < kViews; ++v) {
    if (enc.views[v].empty()) continue;
    const double w = 1.0 / static_cast<double>(enc.views[v].size());
    for (int id : enc.views[v]) {
      simd::active().axpy(w, &emb_.value[static_cast<std::size_t>(id) * e], &enc.x[v * e], e);
    }
  }
  enc.c = b_enc_.value;
  simd::active().gemv(w_enc_.value.data(), h, kViews * e, enc.x.data(), enc.c.data());
  for (double& v : enc.c) v = std::tanh(v);
  return enc;
}

void TinySeq2Seq::encoder_backward(const Encoding& enc, std::span<const double> grad_c) {
  const std::size_t e = config_.embed_dim, h = config_.context_dim;
  std::vector<double> da(h);
  for (std::size_t i = 0; i < h; ++i) da[i] = grad_c[i] * (1.0 - enc.c[i] * enc.c[i]);
  simd::active().axpy(1.0, da.data(), b_enc_.grad.data(), h);
  simd::active().ger(w_enc_.grad.data(), h, kViews * e, 1.0, da.data(), enc.x.data());
  std::vector<double> dx(kViews * e, 0.0);
  simd::active().gemv_t(w_enc_.value.data(), h, kViews * e, da.data(), dx.data());
  for (std::size_t v = 0; v < kViews; ++v) {
    if (enc.views[v].empty()) continue;
    const double w = 1.0 / static_cast<double>(enc.views[v].size());
    for (int id : enc.views[v]) {
      simd::active().axpy(w, &dx[v * e], &emb_.grad[static_cast<std::size_t>(id) * e], e);
    }
  }
}

void TinySeq2Seq::decoder_step(const Encoding& enc, int prev, const std::vector<double>& hist,
                               std::vector<double>& h, std::vector<double>& probs) const {
  const std::vector<double>& c = enc.c;
  const std::size_t d = config_.decoder_dim, v = vocab_.size();
  h = b_dec_.value;
  simd::active().gemv(w_dec_.value.data(), d, config_.context_dim, c.data(), h.data());
  simd::active().axpy(1.0, &prev_.value[static_cast<std::size_t>(prev) * d], h.data(), d);
  simd::active().axpy(1.0, hist.data(), h.data(), d);
  for (double& x : h) x = std::tanh(x);
  probs = b_out_.value;
  simd::active().gemv(w_out_.value.data(), v, d, h.data(), probs.data());
  if (config_.copy_last_utterance) {
    // Copy gate: one learned scalar per step boosts tokens of the last utterance.
    const double gate = copy_b_.value[0] + simd::active().dot(copy_w_.value.data(), h.data(), d);
    simd::active().axpy(gate, enc.copy_mask.data(), probs.data(), v);
    const double assoc_gate = assoc_b_.value[0] + simd::active().dot(assoc_w_.value.data(), h.data(), d);
    simd::active().axpy(assoc_gate, enc.assoc.data(), probs.data(), v);
  }
  softmax_inplace(probs);
}

std::vector<double> TinySeq2Seq::encode(const std::string& text) const { return run_encoder(text, "").c; }

std::string TinySeq2Seq::generate(const std::string& text, const std::string& task_prompt) const {
  const Encoding enc = run_encoder(text, task_prompt);
  const std::size_t d = config_.decoder_dim;
  std::vector<double> hist(d, 0.0), h, probs;
  std::vector<std::string> out;
  int prev = Vocabulary::kBos;
  for (std::size_t step = 0; step < config_.max_output_tokens; ++step) {
    decoder_step(enc, prev, hist, h, probs);
    probs[Vocabulary::kPad] = probs[Vocabulary::kBos] = probs[Vocabulary::kUnk] = -1.0;
    const int next = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (next == Vocabulary::kEos) break;
    out.push_back(vocab_.token(next));
    simd::active().axpy(1.0, &hist_.value[static_cast<std::size_t>(next) * d], hist.data(), d);
    prev = next;
  }
  return detokenize(out);
}

std::vector<double> TinySeq2Seq::next_token_distribution(const std::string& text, const std::string& task_prompt,
                                                         const std::vector<std::string>& prefix) const {
  const Encoding enc = run_encoder(text, task_prompt);
  const std::size_t d = config_.decoder_dim;
  std::vector<double> hist(d, 0.0), h, probs;
  int prev = Vocabulary::kBos;
  for (const std::string& tok : prefix) {
    const int id = vocab_.id(tok);
    simd::active().axpy(1.0, &hist_.value[static_cast<std::size_t>(id) * d], hist.data(), d);
    prev = id;
  }
  decoder_step(enc, prev, hist, h, probs);
  return probs;
}

std::vector<double> TinySeq2Seq::token_nll(const std::string& text, const std::string& task_prompt,
                                           const std::string& target) const {
  const Encoding enc = run_encoder(text, task_prompt);
  std::vector<int> ys = vocab_.encode(tokenize(target));
  ys.push_back(Vocabulary::kEos);
  const std::size_t d = config_.decoder_dim;
  std::vector<double> hist(d, 0.0), h, probs, out;
  int prev = Vocabulary::kBos;
  for (int y : ys) {
    decoder_step(enc, prev, hist, h, probs);
    out.push_back(-std::log(std::max(probs[static_cast<std::size_t>(y)], 1e-300)));
    simd::active().axpy(1.0, &hist_.value[static_cast<std::size_t>(y) * d], hist.data(), d);
    prev = y;
  }
  return out;
}

double TinySeq2Seq::accumulate_seq2seq_gradient(const std::string& text, const std::string& task_prompt,
                                                const std::string& target, double scale) {
  const Encoding enc = run_encoder(text, task_prompt);
  std::vector<int> ys = vocab_.encode(tokenize(target));
  ys.push_back(Vocabulary::kEos);
  const std::size_t d = config_.decoder_dim, v = vocab_.size(), len = ys.size();
  const double w = scale / static_cast<double>(len);

  std::vector<double> hist(d, 0.0), h, probs, dh(d), grad_c(config_.context_dim, 0.0);
  std::vector<std::vector<double>> dz(len, std::vector<double>(d));
  double loss = 0.0;
  int prev = Vocabulary::kBos;
  for (std::size_t l = 0; l < len; ++l) {
    const int y = ys[l];
    decoder_step(enc, prev, hist, h, probs);
    loss += -std::log(std::max(probs[static_cast<std::size_t>(y)], 1e-300));

    // dlogits = w * (p - onehot(y))
    for (double& p : probs) p *= w;
    probs[static_cast<std::size_t>(y)] -= w;
    simd::active().ger(w_out_.grad.data(), v, d, 1.0, probs.data(), h.data());
    simd::active().axpy(1.0, probs.data(), b_out_.grad.data(), v);
    std::fill(dh.begin(), dh.end(), 0.0);
    simd::active().gemv_t(w_out_.value.data(), v, d, probs.data(), dh.data());
    if (config_.copy_last_utterance) {
      const double dgate = simd::active().dot(probs.data(), enc.copy_mask.data(), v);
      copy_b_.grad[0] += dgate;
      simd::active().axpy(dgate, h.data(), copy_w_.grad.data(), d);
      simd::active().axpy(dgate, copy_w_.value.data(), dh.data(), d);
      const double assoc_gate = assoc_b_.value[0] + simd::active().dot(assoc_w_.value.data(), h.data(), d);
      const double dassoc = simd::active().dot(probs.data(), enc.assoc.data(), v);
      assoc_b_.grad[0] += dassoc;
      simd::active().axpy(dassoc, h.data(), assoc_w_.grad.data(), d);
      simd::active().axpy(dassoc, assoc_w_.value.data(), dh.data(), d);
      simd::active().ger(assoc_.grad.data(), v, v, assoc_gate, probs.data(), enc.copy_mask.data());
    }
    for (std::size_t i = 0; i < d; ++i) dz[l][i] = dh[i] * (1.0 - h[i] * h[i]);

    simd::active().axpy(1.0, dz[l].data(), b_dec_.grad.data(), d);
    simd::active().ger(w_dec_.grad.data(), d, config_.context_dim, 1.0, dz[l].data(), enc.c.data());
    simd::active().gemv_t(w_dec_.value.data(), d, config_.context_dim, dz[l].data(), grad_c.data());
    simd::active().axpy(1.0, dz[l].data(), &prev_.grad[static_cast<std::size_t>(prev) * d], d);

    simd::active().axpy(1.0, &hist_.value[static_cast<std::size_t>(y) * d], hist.data(), d);
    prev = y;
  }
  // Token y_k feeds the history of every later step.
  std::vector<double> suffix(d, 0.0);
  for (std::size_t l = len; l-- > 0;) {
    simd::active().axpy(1.0, suffix.data(), &hist_.grad[static_cast<std::size_t>(ys[l]) * d], d);
    simd::active().axpy(1.0, dz[l].data(), suffix.data(), d);
  }
  encoder_backward(enc, grad_c);
  return loss / static_cast<double>(len);
}

void TinySeq2Seq::backprop_encoding(const std::string& text, std::span<const double> grad_context) {
  if (grad_context.size() != config_.context_dim) throw PreconditionError("context gradient has the wrong size");
  encoder_backward(run_encoder(text, ""), grad_context);
}

nlohmann::json TinySeq2Seq::save() const {
  return {{"kind", "tiny"},
          {"config",
           {{"embed_dim", config_.embed_dim},
            {"context_dim", config_.context_dim},
            {"decoder_dim", config_.decoder_dim},
            {"max_output_tokens", config_.max_output_tokens},
            {"copy_last_utterance", config_.copy_last_utterance},
            {"seed", config_.seed}}},
          {"vocabulary", vocab_.save()},
          {"embedding", emb_.value},
          {"w_enc", w_enc_.value},
          {"b_enc", b_enc_.value},
          {"w_dec", w_dec_.value},
          {"prev", prev_.value},
          {"hist", hist_.value},
          {"b_dec", b_dec_.value},
          {"w_out", w_out_.value},
          {"b_out", b_out_.value},
          {"copy_w", copy_w_.value},
          {"copy_b", copy_b_.value},
          {"assoc", assoc_.value},
          {"assoc_w", assoc_w_.value},
          {"assoc_b", assoc_b_.value}};
}

void TinySeq2Seq::load(const nlohmann::json& blob) {
  if (blob.value("kind", "") != "tiny") throw FormatError("", 0, "checkpoint blob is not a tiny backend");
  const auto& c = blob.at("config");
  config_.embed_dim = c.at("embed_dim").get<std::size_t>();
  config_.context_dim = c.at("context_dim").get<std::size_t>();
  config_.decoder_dim = c.at("decoder_dim").get<std::size_t>();
  config_.max_output_tokens = c.at("max_output_tokens").get<std::size_t>();
  config_.copy_last_utterance = c.at("copy_last_utterance").get<bool>();
  config_.seed = c.at("seed").get<std::uint64_t>();
  vocab_ = Vocabulary::load(blob.at("vocabulary"));
  allocate();
  auto read = [&](const char* key, Tensor& t) {
    auto values = blob.at(key).get<std::vector<double>>();
    if (values.size() != t.value.size()) throw FormatError("", 0, std::string("tensor '") + key + "' has the wrong size");
    t.value = std::move(values);
  };
  read("embedding", emb_);
  read("w_enc", w_enc_);
  read("b_enc", b_enc_);
  read("w_dec", w_dec_);
  read("prev", prev_);
  read("hist", hist_);
  read("b_dec", b_dec_);
  read("w_out", w_out_);
  read("b_out", b_out_);
  read("copy_w", copy_w_);
  read("copy_b", copy_b_);
  read("assoc", assoc_);
  read("assoc_w", assoc_w_);
  read("assoc_b", assoc_b_);
}

}  // namespace crsllm::crs
