#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tiser/pipeline.hpp"

namespace tiser {

enum class DatasetKind { tgqa, tempreason_l2, tempreason_l3, timeqa_easy, timeqa_hard, other };

struct SourceSample {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::string context;
    DatasetKind dataset = DatasetKind::other;
};

// A retained sample: the source plus the generated reasoning trace. The
// reasoning/timeline/reflection fields hold the final round; rounds keeps
// every round for multi-round traces.
struct AugmentedSample {
    SourceSample source;
    std::vector<TraceRound> rounds;
    std::string reasoning;
    std::string timeline;
    std::string reflection;
    std::string generated_answer;
};

enum class MatchPolicy { exact_normalized, em };

struct DatasetStats {
    long total = 0;
    long failed = 0;     // generation failures, excluded from the denominator
    long correct = 0;    // == retained
    long discarded = 0;  // generated but answer-inconsistent

    long generated() const { return total - failed; }
    long retained() const { return correct; }
    double correctness_pct() const {
        return generated() > 0 ? 100.0 * static_cast<double>(correct) /
                                     static_cast<double>(generated())
                               : 0.0;
    }
};

struct BuildStats {
    std::map<std::string, DatasetStats> per_dataset;
    DatasetStats overall;
};

struct BuildOutput {
    std::vector<AugmentedSample> retained;
    BuildStats stats;
    std::vector<PipelineResult> runs;  // one per source sample, input order
};

// a' = a under the chosen policy; both policies normalize, em additionally
// honors multi-gold semantics through the evaluation module.
bool match_answers(std::string_view generated, std::string_view gold, MatchPolicy policy);

// Algorithm 2: generate a trace per sample with the gold answer visible to
// the generator, keep only answer-consistent samples. The pipeline mode is
// forced to tiser_with_gold.
BuildOutput build(const std::vector<SourceSample>& sources, Backend& backend,
                  PipelineConfig config, MatchPolicy policy, int parallelism = 1,
                  const ProgressFn& progress = {});

struct SftExample {
    std::string prompt;  // TISER prompt without the gold instruction
    std::string target;  // tagged rounds followed by <answer>gold</answer>
};

SftExample format_sft(const AugmentedSample& sample,
                      const PromptTemplates& templates = PromptTemplates::defaults());

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads the canonical JSONL sample schema ({id, question, answer, context,
// dataset}) plus the documented upstream field-name adapters. Malformed
// lines raise SchemaError naming the line.
std::vector<SourceSample> load_benchmark(const std::string& path,
                                         DatasetKind default_kind = DatasetKind::other);

std::string format_build_stats(const BuildStats& stats);

const char* to_string(DatasetKind kind);
const char* to_string(MatchPolicy policy);
DatasetKind parse_dataset_kind(std::string_view name);
std::optional<MatchPolicy> parse_match_policy(std::string_view name);

}  // namespace tiser
