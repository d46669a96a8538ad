#include "tiser/pipeline.hpp"

#include <atomic>
#include <thread>

#include "tiser/context_parser.hpp"
#include "tiser/text.hpp"

namespace tiser {

namespace {

GenerationRequest make_request(std::string prompt, const PipelineConfig& config) {
    GenerationRequest req;
    req.prompt = std::move(prompt);
    req.max_tokens = config.max_tokens;
    req.temperature = config.temperature;
    return req;
}

std::string revision_prompt(const std::string& original, const std::string& prior_trace,
                            const PipelineConfig& config) {
    std::string text = config.templates.revision;
    text = replace_all(std::move(text), "{original_prompt}", original);
    text = replace_all(std::move(text), "{prior_trace}", prior_trace);
    return text;
}

IterationRecord make_record(const Trace& trace, const GenerationResult& gen) {
    IterationRecord rec;
    rec.raw = gen.text;
    rec.latency_ms = gen.latency_ms;
    if (!trace.rounds.empty()) rec.round = trace.rounds.back();
    rec.tokens = stage_tokens(trace);
    try {
        rec.timeline = extract_timeline(trace);
        rec.consistency = check_consistency(*rec.timeline);
    } catch (const UnparseableTimelineError&) {
        // Leaves timeline/consistency absent; the stop policy treats that as
        // not yet consistent.
    }
    return rec;
}

// One generation per stage: used when single_call=false. The stage prompt
// appends prior material after a "---" separator so backends can still
// recover the original question and context.
std::string stage_prompt(const std::string& original, std::string_view stage_name,
                         const std::string& prior_material) {
    std::string p = original;
    p += "\n\n---\n";
    if (!prior_material.empty()) {
        p += prior_material;
        p += "\n";
    }
    p += "For this turn, produce only the <";
    p += stage_name;
    p += "> section of the response format.";
    return p;
}

struct StagedCall {
    std::string text;
    GenerationResult gen;
};

StagedCall call_stage(Backend& backend, const PipelineConfig& config,
                      const std::string& original, std::string_view stage_name,
                      const std::string& prior_material) {
    StagedCall out;
    out.gen = backend.generate(make_request(stage_prompt(original, stage_name, prior_material),
                                            config));
    auto trace = parse_trace(out.gen.text);
    if (trace) {
        if (stage_name == "answer") {
            out.text = trace->answer;
            if (!out.text.empty()) return out;
        }
        if (!trace->rounds.empty()) {
            const TraceRound& r = trace->rounds.back();
            if (stage_name == "reasoning" && r.has_reasoning) {
                out.text = r.reasoning;
                return out;
            }
            if (stage_name == "timeline" && r.has_timeline) {
                out.text = r.timeline;
                return out;
            }
            if (stage_name == "reflection" && r.has_reflection) {
                out.text = r.reflection;
                return out;
            }
        }
    }
    out.text = trim(out.gen.text);
    return out;
}

void sum_iteration_tokens(PipelineResult& res) {
    res.tokens = StageTokens{};
    res.total_latency_ms = 0;
    for (const auto& it : res.iterations) {
        res.tokens.reasoning += it.tokens.reasoning;
        res.tokens.timeline += it.tokens.timeline;
        res.tokens.reflection += it.tokens.reflection;
        res.tokens.answer += it.tokens.answer;
        res.total_latency_ms += it.latency_ms;
    }
}

PipelineResult run_staged(Backend& backend, const PipelineConfig& config, PipelineResult res,
                          const std::string& original) {
    // Stage I sits outside the loop in the algorithm; stages II/III repeat
    // with a revised reasoning trace feeding each pass.
    StagedCall reasoning = call_stage(backend, config, original, "reasoning", "");
    res.backend_id = reasoning.gen.backend_id;
    std::string r = reasoning.text;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        auto timeline_call = call_stage(backend, config, original, "timeline",
                                        "Current reasoning:\n" + r);
        auto reflection_call =
            call_stage(backend, config, original, "reflection",
                       "Current reasoning:\n" + r + "\nCurrent timeline:\n" + timeline_call.text);

        IterationRecord rec;
        rec.round.reasoning = r;
        rec.round.timeline = timeline_call.text;
        rec.round.reflection = reflection_call.text;
        rec.round.has_reasoning = rec.round.has_timeline = rec.round.has_reflection = true;
        // The reasoning call that produced r belongs to this pass (Stage I on
        // the first pass, the revision call afterwards).
        rec.raw = reasoning.gen.text + "\n" + timeline_call.gen.text + "\n" +
                  reflection_call.gen.text;
        rec.latency_ms = reasoning.gen.latency_ms + timeline_call.gen.latency_ms +
                         reflection_call.gen.latency_ms;
        rec.tokens.reasoning = count_tokens(r);
        rec.tokens.timeline = count_tokens(timeline_call.text);
        rec.tokens.reflection = count_tokens(reflection_call.text);

        ParsedContext parsed = parse_context(timeline_call.text);
        if (!parsed.facts.empty()) {
            rec.timeline = build_timeline(parsed.facts);
            rec.consistency = check_consistency(*rec.timeline);
        }
        rec.reflection_flag = reflection_is_clean(rec.round.reflection, config.reflection_flags)
                                  ? ReflectionFlag::clean
                                  : ReflectionFlag::flagged;

        bool stop = check_stop(rec.round, rec.consistency, config);
        bool last = iter + 1 == config.max_iterations;
        if (stop || last) {
            auto answer_call =
                call_stage(backend, config, original, "answer",
                           "Current reasoning:\n" + r + "\nCurrent timeline:\n" +
                               timeline_call.text + "\nReflection:\n" + reflection_call.text);
            rec.tokens.answer = count_tokens(answer_call.text);
            rec.latency_ms += answer_call.gen.latency_ms;
            rec.raw += "\n" + answer_call.gen.text;
            res.iterations.push_back(std::move(rec));
            res.final_answer = answer_call.text;
            res.stop_reason = stop ? StopReason::converged : StopReason::max_iterations;
            break;
        }

        res.iterations.push_back(std::move(rec));
        reasoning = call_stage(backend, config, original, "reasoning",
                               "Prior reasoning:\n" + r + "\nTimeline:\n" + timeline_call.text +
                                   "\nReflection:\n" + reflection_call.text +
                                   "\nRevise the reasoning.");
        r = reasoning.text;
    }
    sum_iteration_tokens(res);
    return res;
}

}  // namespace

bool reflection_is_clean(std::string_view reflection_text,
                         const std::vector<std::string>& flags) {
    for (const auto& flag : flags) {
        if (contains_ci(reflection_text, flag)) return false;
    }
    return true;
}

bool check_stop(const TraceRound& round, const std::optional<ConsistencyReport>& consistency,
                const PipelineConfig& config) {
    bool timeline_ok = consistency.has_value() && consistency->consistent;
    bool reflection_ok = reflection_is_clean(round.reflection, config.reflection_flags);
    switch (config.stop_policy) {
        case StopPolicy::timeline_consistent: return timeline_ok;
        case StopPolicy::reflection_clean: return reflection_ok;
        case StopPolicy::both: return timeline_ok && reflection_ok;
    }
    return false;
}

StageTokens stage_tokens(const Trace& trace) {
    StageTokens t;
    for (const auto& round : trace.rounds) {
        t.reasoning += count_tokens(round.reasoning);
        t.timeline += count_tokens(round.timeline);
        t.reflection += count_tokens(round.reflection);
    }
    t.answer = count_tokens(trace.answer);
    return t;
}

PipelineResult run(const std::string& question, const std::string& context, Backend& backend,
                   const PipelineConfig& config, const std::optional<std::string>& gold_answer) {
    PipelineResult res;
    res.question = question;
    res.context = context;
    res.mode = config.mode;

    PromptSpec spec;
    spec.mode = config.mode;
    spec.ablation_stages = config.ablation_stages;
    spec.question = question;
    spec.context = context;
    spec.gold_answer = gold_answer;

    std::string original;
    try {
        original = render_prompt(spec, config.templates);
    } catch (const std::exception& e) {
        res.stop_reason = StopReason::generation_failed;
        res.error = e.what();
        return res;
    }

    try {
        if (!config.single_call && config.mode != PromptMode::standard) {
            PipelineResult staged = res;
            return run_staged(backend, config, std::move(staged), original);
        }

        std::string prompt = original;
        for (int iter = 0; iter < config.max_iterations; ++iter) {
            GenerationResult gen = backend.generate(make_request(prompt, config));
            res.backend_id = gen.backend_id;

            auto trace = parse_trace(gen.text);
            if (!trace && config.mode == PromptMode::standard) {
                // Standard prompting answers in the open; the whole response
                // is the answer.
                Trace synth;
                synth.answer = trim(gen.text);
                synth.raw = gen.text;
                trace = std::move(synth);
            }
            if (!trace) {
                IterationRecord rec;
                rec.raw = gen.text;
                rec.latency_ms = gen.latency_ms;
                res.iterations.push_back(std::move(rec));
                res.stop_reason = StopReason::generation_failed;
                res.error = "response has no <answer> tag";
                break;
            }

            IterationRecord rec = make_record(*trace, gen);
            rec.reflection_flag =
                reflection_is_clean(rec.round.reflection, config.reflection_flags)
                    ? ReflectionFlag::clean
                    : ReflectionFlag::flagged;
            bool stop = config.mode == PromptMode::standard ||
                        check_stop(rec.round, rec.consistency, config);
            res.iterations.push_back(std::move(rec));
            res.final_answer = trace->answer;

            if (stop) {
                res.stop_reason = StopReason::converged;
                break;
            }
            if (iter + 1 == config.max_iterations) {
                res.stop_reason = StopReason::max_iterations;
                break;
            }
            prompt = revision_prompt(original, gen.text, config);
        }
    } catch (const std::exception& e) {
        res.stop_reason = StopReason::generation_failed;
        res.error = e.what();
        res.final_answer.clear();
    }

    sum_iteration_tokens(res);
    return res;
}

std::vector<PipelineResult> run_batch(const std::vector<BatchItem>& items, Backend& backend,
                                      const PipelineConfig& config, int parallelism,
                                      const ProgressFn& progress) {
    std::vector<PipelineResult> results(items.size());
    if (items.empty()) return results;

    size_t workers = static_cast<size_t>(std::max(1, parallelism));
    workers = std::min(workers, items.size());

    std::atomic<size_t> next{0};
    std::atomic<size_t> done{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= items.size()) break;
            const BatchItem& item = items[i];
            try {
                results[i] =
                    run(item.question, item.context, backend, config, item.gold_answer);
            } catch (const std::exception& e) {
                PipelineResult fail;
                fail.question = item.question;
                fail.context = item.context;
                fail.mode = config.mode;
                fail.stop_reason = StopReason::generation_failed;
                fail.error = e.what();
                results[i] = std::move(fail);
            }
            results[i].id = item.id;
            size_t d = done.fetch_add(1) + 1;
            if (progress) progress(d, items.size());
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

const char* to_string(StopPolicy policy) {
    switch (policy) {
        case StopPolicy::timeline_consistent: return "timeline_consistent";
        case StopPolicy::reflection_clean: return "reflection_clean";
        case StopPolicy::both: return "both";
    }
    return "?";
}

const char* to_string(StopReason reason) {
    switch (reason) {
        case StopReason::converged: return "converged";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::generation_failed: return "generation_failed";
    }
    return "?";
}

const char* to_string(ReflectionFlag flag) {
    return flag == ReflectionFlag::clean ? "clean" : "flagged";
}

std::optional<StopPolicy> parse_stop_policy(std::string_view name) {
    std::string n = to_lower(trim(name));
    if (n == "timeline_consistent") return StopPolicy::timeline_consistent;
    if (n == "reflection_clean") return StopPolicy::reflection_clean;
    if (n == "both") return StopPolicy::both;
    return std::nullopt;
}

}  // namespace tiser
