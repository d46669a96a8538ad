#include "tiser/trace_protocol.hpp"

#include <array>
#include <cctype>

#include "tiser/context_parser.hpp"
#include "tiser/text.hpp"

namespace tiser {

namespace {

enum class TagName { reasoning, timeline, reflection, answer };

struct TagToken {
    size_t pos = 0;   // index of '<'
    size_t end = 0;   // one past '>'
    TagName name = TagName::reasoning;
    bool close = false;
};

constexpr std::array<std::pair<std::string_view, TagName>, 4> kTags = {{
    {"reasoning", TagName::reasoning},
    {"timeline", TagName::timeline},
    {"reflection", TagName::reflection},
    {"answer", TagName::answer},
}};

std::vector<TagToken> scan_tags(std::string_view raw) {
    std::vector<TagToken> tokens;
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '<') continue;
        size_t j = i + 1;
        bool close = j < raw.size() && raw[j] == '/';
        if (close) ++j;
        for (const auto& [name, tag] : kTags) {
            if (raw.size() - j < name.size() + 1) continue;
            if (!starts_with_ci(raw.substr(j), name)) continue;
            if (raw[j + name.size()] != '>') continue;
            tokens.push_back({i, j + name.size() + 1, tag, close});
            i = j + name.size();  // loop ++i moves past '>'
            break;
        }
    }
    return tokens;
}

struct MutableRound : TraceRound {
    bool used() const { return has_reasoning || has_timeline || has_reflection; }
};

void append_text(std::string& dst, std::string_view text) {
    if (dst.empty()) {
        dst = std::string(text);
    } else {
        dst += "\n";
        dst += text;
    }
}

}  // namespace

std::string render_prompt(const PromptSpec& spec, const PromptTemplates& templates) {
    if (trim(spec.question).empty() || trim(spec.context).empty())
        throw std::invalid_argument("render_prompt requires a question and a context");

    std::string text;
    std::string gold_instruction;
    switch (spec.mode) {
        case PromptMode::standard:
            text = templates.standard;
            break;
        case PromptMode::tiser:
            text = templates.tiser;
            break;
        case PromptMode::tiser_with_gold: {
            if (!spec.gold_answer)
                throw std::invalid_argument("tiser_with_gold requires a gold answer");
            text = templates.tiser;
            gold_instruction =
                "- Perform your reasoning knowing that the answer is: {gold}.\n";
            break;
        }
        case PromptMode::ablation:
            text = build_ablation_template(spec.ablation_stages);
            break;
    }
    text = replace_all(std::move(text), "{gold_instruction}", gold_instruction);
    text = replace_all(std::move(text), "{gold}", spec.gold_answer.value_or(""));
    text = replace_all(std::move(text), "{question}", spec.question);
    text = replace_all(std::move(text), "{context}", spec.context);
    return text;
}

std::optional<Trace> parse_trace(std::string_view raw) {
    auto tokens = scan_tags(raw);

    Trace trace;
    trace.raw = std::string(raw);

    bool answer_seen = false;
    std::optional<MutableRound> current;
    auto ensure_round = [&]() -> MutableRound& {
        if (!current) current.emplace();
        return *current;
    };
    auto close_round = [&] {
        if (current && current->used()) trace.rounds.push_back(*current);
        current.reset();
    };

    if (!tokens.empty() && !trim(raw.substr(0, tokens[0].pos)).empty())
        trace.extra_text_outside_tags = true;
    if (tokens.empty() && !trim(raw).empty()) trace.extra_text_outside_tags = true;

    for (size_t t = 0; t < tokens.size(); ++t) {
        const TagToken& tok = tokens[t];
        size_t content_end = t + 1 < tokens.size() ? tokens[t + 1].pos : raw.size();
        std::string content = trim(raw.substr(tok.end, content_end - tok.end));

        if (!tok.close) {
            switch (tok.name) {
                case TagName::reasoning: {
                    if (current && current->has_reasoning) close_round();
                    auto& round = ensure_round();
                    append_text(round.reasoning, content);
                    round.has_reasoning = true;
                    break;
                }
                case TagName::timeline: {
                    auto& round = ensure_round();
                    append_text(round.timeline, content);
                    round.has_timeline = true;
                    break;
                }
                case TagName::reflection: {
                    auto& round = ensure_round();
                    append_text(round.reflection, content);
                    round.has_reflection = true;
                    break;
                }
                case TagName::answer:
                    trace.answer = content;
                    answer_seen = true;
                    break;
            }
        } else {
            // Stray prose after a close tag belongs to the round's reasoning
            // (the template's "adjustments" slot); after the answer it is
            // outside any structure.
            if (!content.empty()) {
                if (tok.name == TagName::answer || !current) {
                    trace.extra_text_outside_tags = true;
                } else {
                    append_text(current->reasoning, content);
                }
            }
        }
    }
    close_round();

    if (!answer_seen) return std::nullopt;
    return trace;
}

TraceValidation validate_trace(const Trace& trace, PromptMode mode,
                               const std::set<Stage>& ablation_stages) {
    TraceValidation v;
    v.round_count = static_cast<int>(trace.rounds.size());
    v.extra_text_outside_tags = trace.extra_text_outside_tags;

    std::set<Stage> required;
    switch (mode) {
        case PromptMode::standard:
            break;
        case PromptMode::tiser:
        case PromptMode::tiser_with_gold:
            required = {Stage::reasoning, Stage::timeline, Stage::reflection};
            break;
        case PromptMode::ablation:
            required = ablation_stages;
            break;
    }

    if (!required.empty() && trace.rounds.empty()) {
        v.missing_tags = required;
    } else {
        for (const auto& round : trace.rounds) {
            if (required.count(Stage::reasoning) && !round.has_reasoning)
                v.missing_tags.insert(Stage::reasoning);
            if (required.count(Stage::timeline) && !round.has_timeline)
                v.missing_tags.insert(Stage::timeline);
            if (required.count(Stage::reflection) && !round.has_reflection)
                v.missing_tags.insert(Stage::reflection);
        }
    }

    v.well_formed = v.missing_tags.empty() && !trace.answer.empty();
    return v;
}

Timeline extract_timeline(const Trace& trace) {
    if (trace.rounds.empty())
        throw UnparseableTimelineError({}, "trace has no reasoning rounds");
    const TraceRound& last = trace.rounds.back();
    if (!last.has_timeline || trim(last.timeline).empty())
        throw UnparseableTimelineError({}, "final round has no timeline text");

    ParsedContext parsed = parse_context(last.timeline);
    if (parsed.facts.empty())
        throw UnparseableTimelineError(parsed.residual, "timeline text has no parseable events");
    return build_timeline(parsed.facts);
}

const char* to_string(PromptMode mode) {
    switch (mode) {
        case PromptMode::standard: return "standard";
        case PromptMode::tiser: return "tiser";
        case PromptMode::tiser_with_gold: return "tiser_with_gold";
        case PromptMode::ablation: return "ablation";
    }
    return "?";
}

std::optional<PromptMode> parse_prompt_mode(std::string_view name) {
    std::string n = to_lower(trim(name));
    if (n == "standard") return PromptMode::standard;
    if (n == "tiser") return PromptMode::tiser;
    if (n == "tiser_with_gold" || n == "tiser-with-gold") return PromptMode::tiser_with_gold;
    if (n == "ablation") return PromptMode::ablation;
    return std::nullopt;
}

}  // namespace tiser
