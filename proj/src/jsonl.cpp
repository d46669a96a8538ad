#include "tiser/jsonl.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "tiser/text.hpp"

namespace tiser {

namespace {

using nlohmann::json;

json to_json(const TimePoint& tp) {
    json j = {{"year", tp.year}};
    if (tp.month) j["month"] = *tp.month;
    if (tp.day) j["day"] = *tp.day;
    return j;
}

TimePoint time_point_from_json(const json& j) {
    TimePoint tp;
    tp.year = j.at("year").get<int>();
    if (j.contains("month")) tp.month = j["month"].get<int>();
    if (j.contains("day")) tp.day = j["day"].get<int>();
    return tp;
}

json to_json(const TraceRound& round) {
    return {{"reasoning", round.reasoning},
            {"timeline", round.timeline},
            {"reflection", round.reflection},
            {"has_reasoning", round.has_reasoning},
            {"has_timeline", round.has_timeline},
            {"has_reflection", round.has_reflection}};
}

TraceRound trace_round_from_json(const json& j) {
    TraceRound r;
    r.reasoning = j.value("reasoning", "");
    r.timeline = j.value("timeline", "");
    r.reflection = j.value("reflection", "");
    r.has_reasoning = j.value("has_reasoning", !r.reasoning.empty());
    r.has_timeline = j.value("has_timeline", !r.timeline.empty());
    r.has_reflection = j.value("has_reflection", !r.reflection.empty());
    return r;
}

json to_json(const StageTokens& tokens) {
    return {{"reasoning", tokens.reasoning},
            {"timeline", tokens.timeline},
            {"reflection", tokens.reflection},
            {"answer", tokens.answer},
            {"total", tokens.total()}};
}

StageTokens stage_tokens_from_json(const json& j) {
    StageTokens t;
    t.reasoning = j.value("reasoning", 0L);
    t.timeline = j.value("timeline", 0L);
    t.reflection = j.value("reflection", 0L);
    t.answer = j.value("answer", 0L);
    return t;
}

}  // namespace

json to_json(const Timeline& timeline) {
    json events = json::array();
    for (const auto& e : timeline.events) {
        events.push_back({{"label", e.label},
                          {"at", to_json(e.at)},
                          {"boundary", to_string(e.boundary)},
                          {"fact_ref", e.fact_ref},
                          {"closed", e.closed}});
    }
    return {{"events", events}};
}

json to_json(const ConsistencyReport& report) {
    json violations = json::array();
    for (const auto& v : report.violations)
        violations.push_back({{"code", to_string(v.code)}, {"detail", v.detail}});
    return {{"consistent", report.consistent}, {"violations", violations}};
}

json to_json(const PipelineResult& result) {
    json iterations = json::array();
    for (const auto& it : result.iterations) {
        json rec = {{"round", to_json(it.round)},
                    {"reflection_flag", to_string(it.reflection_flag)},
                    {"tokens", to_json(it.tokens)},
                    {"latency_ms", it.latency_ms},
                    {"raw", it.raw}};
        rec["timeline"] = it.timeline ? to_json(*it.timeline) : json(nullptr);
        rec["consistency"] = it.consistency ? to_json(*it.consistency) : json(nullptr);
        iterations.push_back(std::move(rec));
    }
    return {{"schema_version", kResultSchemaVersion},
            {"id", result.id},
            {"question", result.question},
            {"context", result.context},
            {"mode", to_string(result.mode)},
            {"iterations", iterations},
            {"final_answer", result.final_answer},
            {"stop_reason", to_string(result.stop_reason)},
            {"tokens", to_json(result.tokens)},
            {"total_latency_ms", result.total_latency_ms},
            {"backend_id", result.backend_id},
            {"error", result.error}};
}

PipelineResult pipeline_result_from_json(const json& j) {
    PipelineResult r;
    r.id = j.value("id", "");
    r.question = j.value("question", "");
    r.context = j.value("context", "");
    if (auto mode = parse_prompt_mode(j.value("mode", "tiser"))) r.mode = *mode;
    r.final_answer = j.value("final_answer", "");
    std::string reason = j.value("stop_reason", "converged");
    r.stop_reason = reason == "max_iterations"     ? StopReason::max_iterations
                    : reason == "generation_failed" ? StopReason::generation_failed
                                                     : StopReason::converged;
    if (j.contains("tokens")) r.tokens = stage_tokens_from_json(j["tokens"]);
    r.total_latency_ms = j.value("total_latency_ms", 0L);
    r.backend_id = j.value("backend_id", "");
    r.error = j.value("error", "");
    if (j.contains("iterations")) {
        for (const auto& rec : j["iterations"]) {
            IterationRecord it;
            if (rec.contains("round")) it.round = trace_round_from_json(rec["round"]);
            it.reflection_flag = rec.value("reflection_flag", "clean") == std::string("flagged")
                                     ? ReflectionFlag::flagged
                                     : ReflectionFlag::clean;
            if (rec.contains("tokens")) it.tokens = stage_tokens_from_json(rec["tokens"]);
            it.latency_ms = rec.value("latency_ms", 0L);
            it.raw = rec.value("raw", "");
            if (rec.contains("timeline") && rec["timeline"].is_object()) {
                Timeline tl;
                for (const auto& e : rec["timeline"]["events"]) {
                    TimelineEvent ev;
                    ev.label = e.value("label", "");
                    ev.at = time_point_from_json(e.at("at"));
                    ev.boundary = e.value("boundary", "start") == std::string("end")
                                      ? Boundary::end
                                      : Boundary::start;
                    ev.fact_ref = e.value("fact_ref", 0);
                    ev.closed = e.value("closed", false);
                    tl.events.push_back(std::move(ev));
                }
                it.timeline = std::move(tl);
                it.consistency = check_consistency(*it.timeline);
            }
            r.iterations.push_back(std::move(it));
        }
    }
    return r;
}

json to_json(const SolverResult& result) {
    if (result.ok()) {
        return {{"answer", result.answer->answer},
                {"support", result.answer->support},
                {"confidence", to_string(result.answer->confidence)}};
    }
    return {{"error", to_string(result.error->code)}, {"detail", result.error->detail}};
}

json to_json(const ParsedContext& parsed) {
    json facts = json::array();
    for (const auto& f : parsed.facts) {
        json jf = {{"statement", f.statement}, {"source_index", f.source_index}};
        if (!f.subject.empty()) jf["subject"] = f.subject;
        if (!f.relation.empty()) jf["relation"] = f.relation;
        if (!f.object.empty()) jf["object"] = f.object;
        switch (f.kind) {
            case FactKind::point_start: jf["kind"] = "point_start"; break;
            case FactKind::point_end: jf["kind"] = "point_end"; break;
            case FactKind::interval: jf["kind"] = "interval"; break;
        }
        if (f.start) jf["start"] = to_json(*f.start);
        if (f.end) jf["end"] = to_json(*f.end);
        facts.push_back(std::move(jf));
    }
    return {{"format", to_string(parsed.format)},
            {"facts", facts},
            {"residual", parsed.residual}};
}

json to_json(const EvalReport& report) {
    json per = json::object();
    for (const auto& [dataset, score] : report.per_dataset)
        per[dataset] = {{"em_pct", score.em_pct}, {"f1_pct", score.f1_pct}, {"n", score.n}};
    return {{"per_dataset", per},
            {"macro_em", report.macro_em},
            {"macro_f1", report.macro_f1},
            {"em_policy", to_string(report.policy)}};
}

json to_json(const TokenOverheadReport& report) {
    json j = {{"overall_avg", report.overall_avg},
              {"answer_avg", report.answer_avg},
              {"n", report.n}};
    j["reasoning_avg"] = report.reasoning_avg ? json(*report.reasoning_avg) : json(nullptr);
    j["timeline_avg"] = report.timeline_avg ? json(*report.timeline_avg) : json(nullptr);
    j["reflection_avg"] = report.reflection_avg ? json(*report.reflection_avg) : json(nullptr);
    return j;
}

json to_json(const BuildStats& stats) {
    auto one = [](const DatasetStats& ds) {
        return json{{"total", ds.total},
                    {"generated", ds.generated()},
                    {"failed", ds.failed},
                    {"correct", ds.correct},
                    {"retained", ds.retained()},
                    {"discarded", ds.discarded},
                    {"correctness_pct", ds.correctness_pct()}};
    };
    json per = json::object();
    for (const auto& [dataset, ds] : stats.per_dataset) per[dataset] = one(ds);
    return {{"per_dataset", per}, {"overall", one(stats.overall)}};
}

json sft_json(const AugmentedSample& sample, const SftExample& sft) {
    return {{"id", sample.source.id},
            {"dataset", to_string(sample.source.dataset)},
            {"question", sample.source.question},
            {"answer", sample.source.gold_answer},
            {"context", sample.source.context},
            {"reasoning", sample.reasoning},
            {"timeline", sample.timeline},
            {"reflection", sample.reflection},
            {"generated_answer", sample.generated_answer},
            {"rounds", sample.rounds.size()},
            {"prompt", sft.prompt},
            {"target", sft.target}};
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<json> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw SchemaError(path + ":" + std::to_string(line_no) + ": invalid JSON");
        out.push_back(std::move(j));
    }
    return out;
}

void write_jsonl_atomic(const std::string& path, const std::vector<json>& lines) {
    std::string content;
    for (const auto& j : lines) {
        content += j.dump();
        content += '\n';
    }
    atomic_write_file(path, content);
}

json to_json(const RunManifest& manifest) {
    return {{"command", manifest.command},
            {"argv", manifest.argv},
            {"config", manifest.config},
            {"seed", manifest.seed},
            {"backend_id", manifest.backend_id},
            {"template_hashes", manifest.template_hashes},
            {"started_at", manifest.started_at},
            {"finished_at", manifest.finished_at},
            {"outputs", manifest.outputs}};
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    atomic_write_file(path, to_json(manifest).dump(2) + "\n");
}

}  // namespace tiser
