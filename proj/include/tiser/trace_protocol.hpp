#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tiser/prompt_templates.hpp"
#include "tiser/timeline.hpp"

namespace tiser {

enum class PromptMode { standard, tiser, tiser_with_gold, ablation };

struct PromptSpec {
    PromptMode mode = PromptMode::tiser;
    std::set<Stage> ablation_stages;  // included stages when mode == ablation
    std::string question;
    std::string context;
    std::optional<std::string> gold_answer;  // required for tiser_with_gold
};

// One reasoning/timeline/reflection group. Presence flags distinguish an
// absent tag from a present-but-empty one.
struct TraceRound {
    std::string reasoning;
    std::string timeline;
    std::string reflection;
    bool has_reasoning = false;
    bool has_timeline = false;
    bool has_reflection = false;
};

struct Trace {
    std::vector<TraceRound> rounds;
    std::string answer;  // content of the final <answer> tag, trimmed
    std::string raw;
    bool extra_text_outside_tags = false;
};

struct TraceValidation {
    bool well_formed = false;
    std::set<Stage> missing_tags;
    bool extra_text_outside_tags = false;
    int round_count = 0;
};

struct UnparseableTimelineError : std::runtime_error {
    std::vector<std::string> residual;
    explicit UnparseableTimelineError(std::vector<std::string> res, const std::string& what)
        : std::runtime_error(what), residual(std::move(res)) {}
};

// Renders the prompt for the given mode; tiser templates are the verbatim
// paper prompts, ablation prompts are assembled from the included stages.
std::string render_prompt(const PromptSpec& spec,
                          const PromptTemplates& templates = PromptTemplates::defaults());

// Tolerant tag extraction: a tag's content runs to the next tag of any kind
// or end-of-text, a new round begins at each <reasoning> open tag, and only
// the final <answer> counts. Returns nullopt iff no <answer> tag exists.
// Total over arbitrary text.
std::optional<Trace> parse_trace(std::string_view raw);

// well_formed iff every round carries the tags the mode requires and the
// answer is non-empty.
TraceValidation validate_trace(const Trace& trace, PromptMode mode,
                               const std::set<Stage>& ablation_stages = {});

// Parses the final round's timeline text (numbered lists and sentence forms
// both accepted) into an ordered Timeline.
Timeline extract_timeline(const Trace& trace);

const char* to_string(PromptMode mode);
std::optional<PromptMode> parse_prompt_mode(std::string_view name);

}  // namespace tiser
