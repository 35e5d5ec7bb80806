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

#include "crsllm/collab/collab.hpp"

#include <unordered_map>

#include "crsllm/crs/structured.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/parallel.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::collab {

using Json = nlohmann::json;
using tasks::TaskInstance;
using tasks::TaskKind;

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::kNone: return "none";
    case Direction::kCrsAssistsLlm: return "crs_assists_llm";
    case Direction::kLlmAssistsCrs: return "llm_assists_crs";
  }
  return "?";
}

const std::vector<std::string>& llm_roles() {
  static const std::vector<std::string> roles{"CLLM", "ALLM"};
  return roles;
}

const std::vector<std::string>& crs_roles() {
  static const std::vector<std::string> roles{"BCRS", "CCRS"};
  return roles;
}

std::optional<SystemType> role_type(const std::string& role) {
  for (const auto& r : llm_roles()) {
    if (r == role) return SystemType::kLlm;
  }
  for (const auto& r : crs_roles()) {
    if (r == role) return SystemType::kCrs;
  }
  return std::nullopt;
}

std::string Variant::name() const { return assister.empty() ? assisted : assister + "-" + assisted; }

SystemType Variant::assisted_type() const { return *role_type(assisted); }

Variant parse_variant_name(const std::string& name) {
  if (role_type(name)) return {"", name, Direction::kNone};
  const auto dash = name.find('-');
  if (dash == std::string::npos) throw ConfigError("unknown variant or role '" + name + "'");
  const std::string a = name.substr(0, dash), b = name.substr(dash + 1);
  const auto ta = role_type(a), tb = role_type(b);
  if (!ta || !tb || *ta == *tb) throw ConfigError("unknown variant '" + name + "'");
  return {a, b, *ta == SystemType::kLlm ? Direction::kLlmAssistsCrs : Direction::kCrsAssistsLlm};
}

const std::vector<Variant>& collaboration_variants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> v;
    for (const auto& l : llm_roles()) {
      for (const auto& c : crs_roles()) v.push_back({l, c, Direction::kLlmAssistsCrs});
    }
    for (const auto& l : llm_roles()) {
      for (const auto& c : crs_roles()) v.push_back({c, l, Direction::kCrsAssistsLlm});
    }
    return v;
  }();
  return all;
}

std::vector<Variant> baseline_variants() {
  std::vector<Variant> v;
  for (const auto& r : llm_roles()) v.push_back({"", r, Direction::kNone});
  for (const auto& r : crs_roles()) v.push_back({"", r, Direction::kNone});
  return v;
}

// ---------------------------------------------------------------- payloads

namespace {

std::string render_text(const tasks::Prediction& p) {
  switch (p.kind) {
    case TaskKind::kUnderstanding: return crs::render_frames(p.frames);
    case TaskKind::kElicitation: return crs::render_attributes(p.attributes);
    case TaskKind::kGeneration: return p.response;
    case TaskKind::kRecommendation: break;
  }
  return p.letter ? std::string(1, *p.letter) : std::string();
}

void check_kind(const tasks::Prediction& p, const TaskInstance& inst) {
  if (p.kind != inst.kind) throw PreconditionError("prediction and instance disagree on the task kind");
}

}  // namespace

AssistPayload crs_payload(const tasks::Prediction& p, const TaskInstance& inst) {
  check_kind(p, inst);
  AssistPayload out;
  out.source = Source::kCrs;
  out.kind = inst.kind;
  out.instance_key = inst.key();
  out.parse_ok = p.parse_ok;
  if (inst.kind != TaskKind::kRecommendation) {
    out.text_form = render_text(p);
    return out;
  }
  std::vector<tasks::ScoredProduct> ranking = p.ranking;
  if (ranking.empty() && p.product_id) ranking.push_back({*p.product_id, 1.0});
  std::vector<std::string> letters;
  for (const auto& s : ranking) {
    if (auto l = tasks::letter_of(inst, s.product_id)) letters.emplace_back(1, *l);
  }
  out.text_form = text::join(letters, ", ");
  if (!ranking.empty()) out.predicted_product = ranking.front().product_id;
  out.ranked_list = std::move(ranking);
  return out;
}

AssistPayload llm_payload(const tasks::Prediction& p, const TaskInstance& inst,
                          const crs::ItemEmbeddingTable* embeddings) {
  check_kind(p, inst);
  AssistPayload out;
  out.source = Source::kLlm;
  out.kind = inst.kind;
  out.instance_key = inst.key();
  out.parse_ok = p.parse_ok;
  out.text_form = render_text(p);
  if (inst.kind == TaskKind::kRecommendation) {
    if (!embeddings) throw PreconditionError("an LLM recommendation payload needs the CRS embedding table");
    if (p.parse_ok && p.product_id) out.predicted_product = p.product_id;
    out.assist_embedding = assist_vector(out, *embeddings);
  }
  return out;
}

std::vector<double> assist_vector(const AssistPayload& payload, const crs::ItemEmbeddingTable& embeddings) {
  if (!payload.predicted_product || !embeddings.contains(*payload.predicted_product)) {
    return std::vector<double>(embeddings.dim(), 0.0);
  }
  auto row = embeddings.row(*payload.predicted_product);
  return {row.begin(), row.end()};
}

Json to_json(const AssistPayload& p) {
  Json j = {{"source", p.source == Source::kCrs ? "crs" : "llm"},
            {"kind", tasks::task_name(p.kind)},
            {"key", p.instance_key},
            {"text_form", p.text_form},
            {"parse_ok", p.parse_ok},
            {"predicted_product", p.predicted_product ? Json(*p.predicted_product) : Json()}};
  if (p.ranked_list) {
    Json r = Json::array();
    for (const auto& s : *p.ranked_list) r.push_back({{"product_id", s.product_id}, {"probability", s.probability}});
    j["ranked_list"] = r;
  }
  if (p.assist_embedding) j["assist_embedding"] = *p.assist_embedding;
  return j;
}

AssistPayload payload_from_json(const Json& j) {
  AssistPayload p;
  p.source = j.at("source").get<std::string>() == "crs" ? Source::kCrs : Source::kLlm;
  auto kind = tasks::parse_task(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("", 0, "unknown task kind in payload");
  p.kind = *kind;
  p.instance_key = j.at("key").get<std::string>();
  p.text_form = j.at("text_form").get<std::string>();
  p.parse_ok = j.value("parse_ok", true);
  if (j.contains("predicted_product") && j["predicted_product"].is_string()) {
    p.predicted_product = j["predicted_product"].get<std::string>();
  }
  if (j.contains("ranked_list")) {
    std::vector<tasks::ScoredProduct> r;
    for (const auto& s : j["ranked_list"]) r.push_back({s.at("product_id").get<std::string>(), s.at("probability").get<double>()});
    p.ranked_list = std::move(r);
  }
  if (j.contains("assist_embedding")) p.assist_embedding = j["assist_embedding"].get<std::vector<double>>();
  return p;
}

// ---------------------------------------------------------------- augmentation

bool is_crs_augmented(const llm::InstructionSample& s) {
  for (llm::Language l : {llm::Language::kEn, llm::Language::kZh}) {
    if (text::ends_with(s.instruction, " " + llm::builtin_templates(l).crs_assist.advisory)) return true;
  }
  return s.input.find("\n[CRS") != std::string::npos;
}

llm::InstructionSample augment_instruction_with_crs(const llm::InstructionSample& sample, const AssistPayload& payload) {
  if (payload.source != Source::kCrs) throw PreconditionError("instruction augmentation needs a CRS payload");
  if (payload.kind != sample.kind) throw PreconditionError("payload kind does not match the sample");
  if (is_crs_augmented(sample)) throw PreconditionError("sample already carries a CRS section");
  const llm::CrsAssistStrings& s = llm::builtin_templates(sample.language).crs_assist;
  llm::InstructionSample out = sample;
  out.instruction += " " + s.advisory;
  const std::string& marker = sample.kind == TaskKind::kRecommendation ? s.ranking : s.result;
  out.input += marker + (payload.text_form.empty() ? s.no_result : payload.text_form);
  return out;
}

namespace {

bool variant_fits(crs::PromptVariant v, TaskKind kind) {
  switch (v) {
    case crs::PromptVariant::kXU:
    case crs::PromptVariant::kXS: return kind == TaskKind::kUnderstanding;
    case crs::PromptVariant::kXA: return kind == TaskKind::kElicitation;
    case crs::PromptVariant::kXG: return kind == TaskKind::kGeneration;
    case crs::PromptVariant::kXR: return false;
  }
  return false;
}

}  // namespace

crs::PromptSequence augment_prompt_with_llm(const crs::PromptSequence& seq, const AssistPayload& payload) {
  if (seq.variant == crs::PromptVariant::kXR) {
    throw PreconditionError("recommendation assistance goes through the assist embedding, not the prompt");
  }
  if (payload.source != Source::kLlm) throw PreconditionError("prompt augmentation needs an LLM payload");
  if (!variant_fits(seq.variant, payload.kind)) throw PreconditionError("payload kind does not match the prompt");
  const std::string marker = crs::surface(crs::SpecialToken::kLlm);
  if (seq.text.find(marker) != std::string::npos) throw PreconditionError("prompt already carries an [LLM] segment");
  crs::PromptSequence out = seq;
  out.text += " " + marker;
  if (payload.parse_ok && !payload.text_form.empty()) out.text += " " + payload.text_form;
  return out;
}

crs::RecommendationScores enhanced_score_candidates(const crs::RecommendationHead& head,
                                                    const crs::ItemEmbeddingTable& embeddings,
                                                    const crs::Seq2SeqBackend& backend, const crs::PromptSequence& x_r,
                                                    const std::vector<std::string>& candidates,
                                                    const AssistPayload& payload) {
  std::vector<double> assist;
  if (payload.assist_embedding) {
    assist = *payload.assist_embedding;
    if (assist.size() != embeddings.dim()) throw PreconditionError("assist embedding has the wrong dimension");
  }
  return crs::score_with_context(head, embeddings, backend.encode(x_r.text), candidates, assist);
}

// ---------------------------------------------------------------- runner

llm::InstructionSample llm_input(const TaskInstance& inst, const CollabData& data) {
  return llm::build_instruction_sample(inst, data.category, data.language);
}

tasks::Prediction llm_predict(const llm::LlmBackend& backend, const llm::InstructionSample& sample,
                              const TaskInstance& inst) {
  tasks::Prediction p = llm::parse_llm_output(backend.complete(sample.instruction, sample.input), inst.kind,
                                              sample.candidates);
  p.instance_key = inst.key();
  return p;
}

namespace {

std::vector<const TaskInstance*> of_kind(const std::vector<TaskInstance>& all, TaskKind kind) {
  std::vector<const TaskInstance*> out;
  for (const auto& i : all) {
    if (i.kind == kind) out.push_back(&i);
  }
  return out;
}

template <typename Fn>
std::vector<tasks::Prediction> predict_all(const std::vector<const TaskInstance*>& insts, std::size_t threads, Fn fn) {
  std::vector<tasks::Prediction> out(insts.size());
  parallel_for(insts.size(), threads, [&](std::size_t i) { out[i] = fn(*insts[i]); });
  return out;
}

std::vector<const TaskInstance*> pointers(const std::vector<TaskInstance>& v) {
  std::vector<const TaskInstance*> out;
  for (const auto& i : v) out.push_back(&i);
  return out;
}

}  // namespace

CollabResult run_collaboration(const Variant& variant, TaskKind kind, const CollabData& data, SystemProvider& systems) {
  for (const auto& inst : data.test) {
    if (inst.kind != kind) throw PreconditionError("test instances must all be of the evaluated kind");
  }
  if (!role_type(variant.assisted)) throw ConfigError("unknown role '" + variant.assisted + "'");
  CollabResult r;
  r.variant = variant;
  r.kind = kind;
  const auto train_k = of_kind(data.train, kind);
  const auto test = pointers(data.test);
  const std::size_t threads = data.threads;
  auto maybe_gold = [&](tasks::Prediction p, const TaskInstance& inst) {
    return data.gold_assist ? tasks::gold_prediction(inst) : p;
  };

  if (variant.assisted_type() == SystemType::kLlm) {
    // Payloads first, from the frozen CRS assister.
    std::unordered_map<std::string, AssistPayload> train_payload;
    if (variant.direction == Direction::kCrsAssistsLlm) {
      const crs::UnifiedCrs& assister = systems.assister_crs(variant.assister);
      auto make = [&](const TaskInstance& inst) { return maybe_gold(crs::crs_predict(assister, inst), inst); };
      const auto train_pred = predict_all(train_k, threads, make);
      const auto test_pred = predict_all(test, threads, make);
      for (std::size_t i = 0; i < train_k.size(); ++i) {
        r.train_payloads.push_back(crs_payload(train_pred[i], *train_k[i]));
        train_payload.emplace(r.train_payloads.back().instance_key, r.train_payloads.back());
      }
      for (std::size_t i = 0; i < test.size(); ++i) r.test_payloads.push_back(crs_payload(test_pred[i], *test[i]));
    }
    std::unique_ptr<llm::LlmBackend> model = systems.fresh_llm(variant.assisted);
    std::vector<llm::InstructionSample> samples;
    for (const auto& inst : data.train) {
      llm::InstructionSample s = llm_input(inst, data);
      if (auto it = train_payload.find(inst.key()); it != train_payload.end()) {
        s = augment_instruction_with_crs(s, it->second);
      }
      samples.push_back(std::move(s));
    }
    if (model->trainable()) model->fine_tune(samples);
    std::vector<llm::InstructionSample> inputs(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      inputs[i] = llm_input(*test[i], data);
      if (!r.test_payloads.empty()) inputs[i] = augment_instruction_with_crs(inputs[i], r.test_payloads[i]);
      r.assisted_inputs.push_back(inputs[i].input);
    }
    r.predictions.resize(test.size());
    parallel_for(test.size(), threads, [&](std::size_t i) { r.predictions[i] = llm_predict(*model, inputs[i], *test[i]); });
    return r;
  }

  // The assisted system is a CRS.
  std::shared_ptr<crs::UnifiedCrs> model = systems.fresh_crs(variant.assisted);
  r.assisted_crs = model;
  const llm::LlmBackend* assister =
      variant.direction == Direction::kLlmAssistsCrs ? &systems.assister_llm(variant.assister) : nullptr;
  auto llm_make = [&](const TaskInstance& inst) {
    return maybe_gold(llm_predict(*assister, llm_input(inst, data), inst), inst);
  };

  std::unordered_map<std::string, AssistPayload> train_payload;
  if (assister) {
    const auto train_pred = predict_all(train_k, threads, llm_make);
    for (std::size_t i = 0; i < train_k.size(); ++i) {
      r.train_payloads.push_back(llm_payload(train_pred[i], *train_k[i], &model->embeddings()));
      train_payload.emplace(r.train_payloads.back().instance_key, r.train_payloads.back());
    }
  }
  crs::TrainingData training;
  for (const auto& inst : data.train) {
    auto it = train_payload.find(inst.key());
    if (inst.kind == TaskKind::kRecommendation) {
      crs::RecExample ex = crs::make_rec_example(inst);
      if (it != train_payload.end()) ex.assist_product = it->second.predicted_product;
      training.recommendation.push_back(std::move(ex));
    } else {
      crs::Seq2SeqExample ex = crs::make_seq2seq_example(inst);
      if (it != train_payload.end()) ex.prompt = augment_prompt_with_llm(ex.prompt, it->second);
      training.seq2seq.push_back(std::move(ex));
    }
  }
  r.training = crs::train_two_stage(*model, training, data.schedule);

  std::vector<tasks::Prediction> test_pred;
  if (assister) test_pred = predict_all(test, threads, llm_make);
  std::vector<crs::PromptSequence> prompts(test.size());
  std::vector<std::vector<double>> assists(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    prompts[i] = crs::serialize_context(*test[i]);
    if (assister) {
      // ê comes from the trained table.
      r.test_payloads.push_back(llm_payload(test_pred[i], *test[i], &model->embeddings()));
      if (kind == TaskKind::kRecommendation) {
        assists[i] = *r.test_payloads.back().assist_embedding;
      } else {
        prompts[i] = augment_prompt_with_llm(prompts[i], r.test_payloads.back());
      }
    }
    r.assisted_inputs.push_back(prompts[i].text);
  }
  r.predictions.resize(test.size());
  parallel_for(test.size(), threads,
               [&](std::size_t i) { r.predictions[i] = model->predict(*test[i], prompts[i], assists[i]); });
  return r;
}

}  // namespace crsllm::collab
