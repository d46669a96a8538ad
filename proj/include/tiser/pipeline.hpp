#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tiser/backend.hpp"
#include "tiser/timeline.hpp"
#include "tiser/trace_protocol.hpp"

namespace tiser {

enum class StopPolicy { timeline_consistent, reflection_clean, both };
enum class StopReason { converged, max_iterations, generation_failed };
enum class ReflectionFlag { clean, flagged };

struct PipelineConfig {
    PromptMode mode = PromptMode::tiser;
    std::set<Stage> ablation_stages;
    int max_iterations = 3;
    StopPolicy stop_policy = StopPolicy::both;
    bool single_call = true;
    // Reflection phrases that mark a round as flagged; matches the language
    // of observed multi-round transcripts.
    std::vector<std::string> reflection_flags = {"incorrect", "flawed", "error", "contradict"};
    PromptTemplates templates = PromptTemplates::defaults();
    int max_tokens = 1024;
    double temperature = 0.0;
};

// Whitespace-token counts per stage; total is their sum, which makes the
// accounting identity (stage sums + answer = total) hold exactly.
struct StageTokens {
    long reasoning = 0;
    long timeline = 0;
    long reflection = 0;
    long answer = 0;
    long total() const { return reasoning + timeline + reflection + answer; }
};

struct IterationRecord {
    TraceRound round;
    std::optional<Timeline> timeline;  // absent when the timeline text was unparseable
    std::optional<ConsistencyReport> consistency;
    ReflectionFlag reflection_flag = ReflectionFlag::clean;
    StageTokens tokens;
    long latency_ms = 0;
    std::string raw;
};

struct PipelineResult {
    std::string id;
    std::string question;
    std::string context;
    PromptMode mode = PromptMode::tiser;
    std::vector<IterationRecord> iterations;
    std::string final_answer;
    StopReason stop_reason = StopReason::converged;
    StageTokens tokens;  // summed over iterations
    long total_latency_ms = 0;
    std::string backend_id;
    std::string error;  // set when stop_reason == generation_failed
};

bool reflection_is_clean(std::string_view reflection_text,
                         const std::vector<std::string>& flags);

// Stop test for one loop pass: timeline consistency, clean reflection, or
// both, per the configured policy.
bool check_stop(const TraceRound& round, const std::optional<ConsistencyReport>& consistency,
                const PipelineConfig& config);

StageTokens stage_tokens(const Trace& trace);

// Executes the four-stage loop for one sample: generate, parse, build and
// check the timeline, reflect, and re-prompt with the prior trace until the
// stop policy holds or max_iterations is reached.
PipelineResult run(const std::string& question, const std::string& context, Backend& backend,
                   const PipelineConfig& config,
                   const std::optional<std::string>& gold_answer = std::nullopt);

struct BatchItem {
    std::string id;
    std::string question;
    std::string context;
    std::optional<std::string> gold_answer;
};

using ProgressFn = std::function<void(size_t done, size_t total)>;

// Results come back in input order regardless of completion order; one
// sample's failure never aborts the batch. The progress callback must be
// thread-safe.
std::vector<PipelineResult> run_batch(const std::vector<BatchItem>& items, Backend& backend,
                                      const PipelineConfig& config, int parallelism,
                                      const ProgressFn& progress = {});

const char* to_string(StopPolicy policy);
const char* to_string(StopReason reason);
const char* to_string(ReflectionFlag flag);
std::optional<StopPolicy> parse_stop_policy(std::string_view name);

}  // namespace tiser
