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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crsllm/tasks/prediction.hpp"
#include "crsllm/tasks/task.hpp"
#include "json.hpp"

namespace crsllm::eval {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Counts behind a P/R/F1 triple; these pool across instances and categories.
struct MatchCounts {
  double matched = 0.0;
  double predicted = 0.0;
  double gold = 0.0;
};

Prf prf_from_counts(const MatchCounts& c);
MatchCounts match_counts(const std::set<std::string>& pred, const std::set<std::string>& gold);
Prf prf1(const std::set<std::string>& pred, const std::set<std::string>& gold);

// Normalized matching keys: trimmed, punctuation-normalized.
std::set<std::string> frame_items(const std::vector<corpus::SemanticFrame>& frames);
std::set<std::string> attribute_items(const std::vector<std::string>& attributes);

struct RankResult {
  double accuracy = 0.0;
  std::optional<double> hit;  // absent for single-choice predictions
  std::optional<double> mrr;
};

// `scores` is re-ranked by probability, ties by product id. Throws
// PreconditionError when K < 1 or gold is not scored.
RankResult rank_metrics(const std::vector<tasks::ScoredProduct>& scores, const std::string& gold, int k);
// Single-choice prediction: Accuracy only. Throws when gold is not a candidate.
RankResult rank_single(const std::optional<std::string>& predicted, const std::string& gold,
                       const std::vector<std::string>& candidates);

// Unique unigrams over total unigrams for one response; throws on an empty one.
double distinct_1(const std::vector<std::string>& tokens);
// Mean over responses.
double distinct_1(const std::vector<std::vector<std::string>>& responses);

struct AnnotationRecord {
  std::string annotator_id;
  std::string method_id;
  std::string dialogue_id;
  std::string response_text;
  int informativeness = 1;
  int relevance = 1;
  std::string timestamp;

  std::string key() const;  // annotator|method|dialogue
};

// Throws ValidationError unless both scores lie in 1..5 and ids are non-empty.
AnnotationRecord make_annotation_record(std::string annotator_id, std::string method_id, std::string dialogue_id,
                                        std::string response_text, int informativeness, int relevance,
                                        std::string timestamp = "");
nlohmann::json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);  // validates

struct HumanScores {
  double informativeness = 0.0;
  double relevance = 0.0;
  std::size_t records = 0;
};

// Throws PreconditionError when the method has no records.
HumanScores aggregate_human(const std::vector<AnnotationRecord>& records, const std::string& method_id);

enum class Aggregation { kMacro, kMicro };
const char* aggregation_name(Aggregation a);
std::optional<Aggregation> parse_aggregation(const std::string& name);

struct MetricReport {
  tasks::TaskKind task = tasks::TaskKind::kUnderstanding;
  std::string category;  // or "all"
  std::map<std::string, double> values;
  std::size_t support = 0;
  // Additive totals that let categories pool (matched/predicted/gold,
  // accuracy/hit/mrr/distinct sums and their counts).
  std::map<std::string, double> sums;
  std::string aggregation;  // "" for a single category, else macro/micro
  std::string f1_method = "aggregate";

  bool operator==(const MetricReport&) const = default;
};

// Metric names per task, in table order.
const std::vector<std::string>& metric_names(tasks::TaskKind kind);

// Per-category evaluation. Understanding/elicitation pool tags over all
// instances (micro within the category) and derive F1 from the pooled P and
// R. Recommendation averages Accuracy/Hit@K/MRR@K; Hit/MRR are left out when
// any prediction carries no ranking. Generation reports Distinct-1, scoring
// empty responses as 0. Predictions align with instances.
MetricReport evaluate(tasks::TaskKind kind, const std::string& category,
                      const std::vector<tasks::TaskInstance>& instances,
                      const std::vector<tasks::Prediction>& predictions, int k = 5);

// Throws PreconditionError on mixed tasks or metric sets.
MetricReport aggregate_categories(const std::vector<MetricReport>& reports, Aggregation mode = Aggregation::kMacro);

nlohmann::json to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

}  // namespace crsllm::eval
