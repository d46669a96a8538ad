#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tiser/pipeline.hpp"

namespace tiser {

enum class EmPolicy { normalized, raw };

// SQuAD-style normalization: lowercase, strip punctuation, drop the articles
// {a, an, the}, split on whitespace.
std::vector<std::string> normalize_answer(std::string_view s);

// 1 iff the normalized token sequences are equal (or the raw strings, under
// EmPolicy::raw); max over multiple acceptable golds.
int exact_match(std::string_view prediction, std::span<const std::string> golds,
                EmPolicy policy = EmPolicy::normalized);

// Multiset token overlap F1; 1 when both sides normalize to nothing, 0 when
// only one does; max over multiple golds.
double token_f1(std::string_view prediction, std::span<const std::string> golds);

struct ScoredPrediction {
    std::string id;
    std::string prediction;
    std::vector<std::string> golds;
    std::string dataset;
    int em = 0;
    double f1 = 0.0;
};

ScoredPrediction score_prediction(std::string id, std::string prediction,
                                  std::vector<std::string> golds, std::string dataset,
                                  EmPolicy policy = EmPolicy::normalized);

struct DatasetScore {
    double em_pct = 0.0;
    double f1_pct = 0.0;
    long n = 0;
};

struct EvalReport {
    std::map<std::string, DatasetScore> per_dataset;
    double macro_em = 0.0;  // unweighted mean over datasets
    double macro_f1 = 0.0;
    EmPolicy policy = EmPolicy::normalized;
};

EvalReport aggregate(std::span<const ScoredPrediction> scored,
                     EmPolicy policy = EmPolicy::normalized);

struct TokenOverheadReport {
    double overall_avg = 0.0;
    std::optional<double> reasoning_avg;  // absent for standard-mode runs
    std::optional<double> timeline_avg;
    std::optional<double> reflection_avg;
    double answer_avg = 0.0;
    long n = 0;
};

// Per-stage whitespace-token averages over successful runs; failed
// generations are excluded.
TokenOverheadReport token_overhead(std::span<const PipelineResult> results);

// Table-style renderings: per-dataset EM/F1 with a macro average row, and
// the overall/reasoning/timeline/reflection token table.
std::string format_eval_table(const EvalReport& report);
std::string format_overhead_table(const TokenOverheadReport& report);

const char* to_string(EmPolicy policy);
std::optional<EmPolicy> parse_em_policy(std::string_view name);

}  // namespace tiser
