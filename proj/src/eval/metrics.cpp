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

#include "crsllm/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "crsllm/crs/tokenizer.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::eval {

using Json = nlohmann::json;
using tasks::TaskKind;

Prf prf_from_counts(const MatchCounts& c) {
  Prf r;
  r.precision = c.predicted > 0 ? c.matched / c.predicted : 0.0;
  r.recall = c.gold > 0 ? c.matched / c.gold : 0.0;
  const double s = r.precision + r.recall;
  r.f1 = s > 0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

MatchCounts match_counts(const std::set<std::string>& pred, const std::set<std::string>& gold) {
  MatchCounts c;
  for (const auto& p : pred) c.matched += static_cast<double>(gold.count(p));
  c.predicted = static_cast<double>(pred.size());
  c.gold = static_cast<double>(gold.size());
  return c;
}

Prf prf1(const std::set<std::string>& pred, const std::set<std::string>& gold) {
  return prf_from_counts(match_counts(pred, gold));
}

namespace {

std::string norm(const std::string& s) { return text::trim(text::normalize_punctuation(s)); }

}  // namespace

std::set<std::string> frame_items(const std::vector<corpus::SemanticFrame>& frames) {
  std::set<std::string> out;
  for (const auto& f : frames) out.insert(norm(f.attribute) + '\x1f' + norm(f.value));
  return out;
}

std::set<std::string> attribute_items(const std::vector<std::string>& attributes) {
  std::set<std::string> out;
  for (const auto& a : attributes) out.insert(norm(a));
  return out;
}

RankResult rank_metrics(const std::vector<tasks::ScoredProduct>& scores, const std::string& gold, int k) {
  if (k < 1) throw PreconditionError("K must be at least 1");
  const auto ranked = tasks::rank(scores);
  std::size_t rank = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].product_id == gold) {
      rank = i + 1;
      break;
    }
  }
  if (rank == 0) throw PreconditionError("gold product '" + gold + "' is not in the candidate set");
  RankResult r;
  r.accuracy = rank == 1 ? 1.0 : 0.0;
  const bool in = rank <= static_cast<std::size_t>(k);
  r.hit = in ? 1.0 : 0.0;
  r.mrr = in ? 1.0 / static_cast<double>(rank) : 0.0;
  return r;
}

RankResult rank_single(const std::optional<std::string>& predicted, const std::string& gold,
                       const std::vector<std::string>& candidates) {
  if (std::find(candidates.begin(), candidates.end(), gold) == candidates.end()) {
    throw PreconditionError("gold product '" + gold + "' is not in the candidate set");
  }
  RankResult r;
  r.accuracy = predicted && *predicted == gold ? 1.0 : 0.0;
  return r;
}

double distinct_1(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw PreconditionError("Distinct-1 is undefined for an empty response");
  const std::set<std::string> unique(tokens.begin(), tokens.end());
  return static_cast<double>(unique.size()) / static_cast<double>(tokens.size());
}

double distinct_1(const std::vector<std::vector<std::string>>& responses) {
  if (responses.empty()) throw PreconditionError("Distinct-1 needs at least one response");
  double sum = 0.0;
  for (const auto& r : responses) sum += distinct_1(r);
  return sum / static_cast<double>(responses.size());
}

// ---------------------------------------------------------------- human scores

std::string AnnotationRecord::key() const { return annotator_id + "|" + method_id + "|" + dialogue_id; }

AnnotationRecord make_annotation_record(std::string annotator_id, std::string method_id, std::string dialogue_id,
                                        std::string response_text, int informativeness, int relevance,
                                        std::string timestamp) {
  if (informativeness < 1 || informativeness > 5) throw ValidationError("informativeness must lie in 1..5");
  if (relevance < 1 || relevance > 5) throw ValidationError("relevance must lie in 1..5");
  if (annotator_id.empty() || method_id.empty() || dialogue_id.empty()) {
    throw ValidationError("annotation record needs annotator, method and dialogue ids");
  }
  return {std::move(annotator_id), std::move(method_id),  std::move(dialogue_id), std::move(response_text),
          informativeness,         relevance,             std::move(timestamp)};
}

Json to_json(const AnnotationRecord& r) {
  return {{"annotator_id", r.annotator_id}, {"method_id", r.method_id}, {"dialogue_id", r.dialogue_id},
          {"response_text", r.response_text}, {"informativeness", r.informativeness},
          {"relevance", r.relevance}, {"timestamp", r.timestamp}};
}

AnnotationRecord annotation_from_json(const Json& j) {
  return make_annotation_record(j.at("annotator_id").get<std::string>(), j.at("method_id").get<std::string>(),
                                j.at("dialogue_id").get<std::string>(), j.value("response_text", ""),
                                j.at("informativeness").get<int>(), j.at("relevance").get<int>(),
                                j.value("timestamp", ""));
}

HumanScores aggregate_human(const std::vector<AnnotationRecord>& records, const std::string& method_id) {
  HumanScores h;
  double info = 0.0, rel = 0.0;
  for (const auto& r : records) {
    if (r.method_id != method_id) continue;
    info += r.informativeness;
    rel += r.relevance;
    ++h.records;
  }
  if (h.records == 0) throw PreconditionError("no annotation records for method '" + method_id + "'");
  h.informativeness = info / static_cast<double>(h.records);
  h.relevance = rel / static_cast<double>(h.records);
  return h;
}

// ---------------------------------------------------------------- reports

const char* aggregation_name(Aggregation a) { return a == Aggregation::kMicro ? "micro" : "macro"; }

std::optional<Aggregation> parse_aggregation(const std::string& name) {
  if (name == "macro") return Aggregation::kMacro;
  if (name == "micro") return Aggregation::kMicro;
  return std::nullopt;
}

const std::vector<std::string>& metric_names(TaskKind kind) {
  static const std::vector<std::string> prf{"P", "R", "F1"};
  static const std::vector<std::string> rec{"Accuracy", "Hit@5", "MRR@5"};
  static const std::vector<std::string> gen{"Distinct-1"};
  switch (kind) {
    case TaskKind::kUnderstanding:
    case TaskKind::kElicitation: return prf;
    case TaskKind::kRecommendation: return rec;
    case TaskKind::kGeneration: return gen;
  }
  return prf;
}

namespace {

void fill_prf(MetricReport& r, const MatchCounts& c) {
  const Prf p = prf_from_counts(c);
  r.values["P"] = p.precision;
  r.values["R"] = p.recall;
  r.values["F1"] = p.f1;
  r.sums["matched"] = c.matched;
  r.sums["predicted"] = c.predicted;
  r.sums["gold"] = c.gold;
}

MatchCounts counts_of(const MetricReport& r) {
  return {r.sums.at("matched"), r.sums.at("predicted"), r.sums.at("gold")};
}

}  // namespace

MetricReport evaluate(TaskKind kind, const std::string& category, const std::vector<tasks::TaskInstance>& instances,
                      const std::vector<tasks::Prediction>& predictions, int k) {
  if (instances.size() != predictions.size()) throw PreconditionError("predictions must align with instances");
  if (instances.empty()) throw PreconditionError("cannot evaluate an empty instance set");
  MetricReport r;
  r.task = kind;
  r.category = category;
  r.support = instances.size();
  const double n = static_cast<double>(instances.size());
  switch (kind) {
    case TaskKind::kUnderstanding:
    case TaskKind::kElicitation: {
      MatchCounts total;
      for (std::size_t i = 0; i < instances.size(); ++i) {
        const bool u = kind == TaskKind::kUnderstanding;
        const MatchCounts c = u ? match_counts(frame_items(predictions[i].frames), frame_items(instances[i].gold_frames))
                                : match_counts(attribute_items(predictions[i].attributes),
                                               attribute_items(instances[i].gold_attributes));
        total.matched += c.matched;
        total.predicted += c.predicted;
        total.gold += c.gold;
      }
      fill_prf(r, total);
      break;
    }
    case TaskKind::kRecommendation: {
      double acc = 0.0, hit = 0.0, mrr = 0.0;
      bool ranked = true;
      for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const auto& p = predictions[i];
        if (!inst.gold_product) throw PreconditionError(inst.key() + ": no gold product");
        RankResult rr;
        if (!p.ranking.empty()) {
          rr = rank_metrics(p.ranking, *inst.gold_product, k);
        } else {
          std::vector<std::string> ids;
          for (const auto& c : inst.candidates) ids.push_back(c.product.product_id);
          rr = rank_single(p.parse_ok ? p.product_id : std::nullopt, *inst.gold_product, ids);
          ranked = false;
        }
        acc += rr.accuracy;
        hit += rr.hit.value_or(0.0);
        mrr += rr.mrr.value_or(0.0);
      }
      r.values["Accuracy"] = acc / n;
      r.sums["accuracy"] = acc;
      if (ranked) {
        const std::string ks = std::to_string(k);
        r.values["Hit@" + ks] = hit / n;
        r.values["MRR@" + ks] = mrr / n;
        r.sums["hit"] = hit;
        r.sums["mrr"] = mrr;
      }
      r.sums["count"] = n;
      break;
    }
    case TaskKind::kGeneration: {
      double sum = 0.0;
      for (const auto& p : predictions) {
        const auto tokens = crs::tokenize(p.response);
        if (!tokens.empty()) sum += distinct_1(tokens);
      }
      r.values["Distinct-1"] = sum / n;
      r.sums["distinct"] = sum;
      r.sums["count"] = n;
      break;
    }
  }
  return r;
}

MetricReport aggregate_categories(const std::vector<MetricReport>& reports, Aggregation mode) {
  if (reports.empty()) throw PreconditionError("nothing to aggregate");
  MetricReport out;
  out.task = reports.front().task;
  out.category = "all";
  out.aggregation = aggregation_name(mode);
  std::set<std::string> names;
  for (const auto& [name, v] : reports.front().values) names.insert(name);
  for (const auto& r : reports) {
    if (r.task != out.task) throw PreconditionError("cannot aggregate reports of different tasks");
    std::set<std::string> other;
    for (const auto& [name, v] : r.values) other.insert(name);
    if (other != names) throw PreconditionError("cannot aggregate reports with different metric sets");
    out.support += r.support;
    for (const auto& [name, v] : r.sums) out.sums[name] += v;
  }
  if (mode == Aggregation::kMacro) {
    for (const auto& name : names) {
      double sum = 0.0;
      for (const auto& r : reports) sum += r.values.at(name);
      out.values[name] = sum / static_cast<double>(reports.size());
    }
    return out;
  }
  switch (out.task) {
    case TaskKind::kUnderstanding:
    case TaskKind::kElicitation: fill_prf(out, counts_of(out)); break;
    case TaskKind::kRecommendation:
    case TaskKind::kGeneration: {
      const double n = out.sums.at("count");
      for (const auto& name : names) {
        std::string key = name == "Accuracy" ? "accuracy" : name == "Distinct-1" ? "distinct"
                          : text::starts_with(name, "Hit@") ? "hit" : "mrr";
        out.values[name] = out.sums.at(key) / n;
      }
      break;
    }
  }
  return out;
}

Json to_json(const MetricReport& r) {
  return {{"task", tasks::task_name(r.task)}, {"category", r.category}, {"values", r.values},
          {"support", r.support}, {"sums", r.sums}, {"aggregation", r.aggregation}, {"f1_method", r.f1_method}};
}

MetricReport report_from_json(const Json& j) {
  MetricReport r;
  auto kind = tasks::parse_task(j.at("task").get<std::string>());
  if (!kind) throw FormatError("", 0, "unknown task in metric report");
  r.task = *kind;
  r.category = j.at("category").get<std::string>();
  r.values = j.at("values").get<std::map<std::string, double>>();
  r.support = j.at("support").get<std::size_t>();
  r.sums = j.value("sums", std::map<std::string, double>{});
  r.aggregation = j.value("aggregation", "");
  r.f1_method = j.value("f1_method", "aggregate");
  return r;
}

}  // namespace crsllm::eval
