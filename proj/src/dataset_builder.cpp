#include "tiser/dataset_builder.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tiser/evaluation.hpp"
#include "tiser/text.hpp"

namespace tiser {

namespace {

using nlohmann::json;

std::optional<std::string> pick_field(const json& j, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        auto it = j.find(name);
        if (it == j.end()) continue;
        if (it->is_string()) return it->get<std::string>();
        if (it->is_number_integer()) return std::to_string(it->get<long>());
    }
    return std::nullopt;
}

}  // namespace

bool match_answers(std::string_view generated, std::string_view gold, MatchPolicy policy) {
    if (policy == MatchPolicy::exact_normalized) {
        return normalize_answer(generated) == normalize_answer(gold);
    }
    std::vector<std::string> golds = {std::string(gold)};
    return exact_match(generated, golds) == 1;
}

BuildOutput build(const std::vector<SourceSample>& sources, Backend& backend,
                  PipelineConfig config, MatchPolicy policy, int parallelism,
                  const ProgressFn& progress) {
    config.mode = PromptMode::tiser_with_gold;

    std::vector<BatchItem> items;
    items.reserve(sources.size());
    for (const auto& s : sources)
        items.push_back({s.id, s.question, s.context, s.gold_answer});

    BuildOutput out;
    out.runs = run_batch(items, backend, config, parallelism, progress);

    for (size_t i = 0; i < sources.size(); ++i) {
        const SourceSample& src = sources[i];
        const PipelineResult& run = out.runs[i];
        DatasetStats& ds = out.stats.per_dataset[to_string(src.dataset)];
        ++ds.total;
        ++out.stats.overall.total;

        if (run.stop_reason == StopReason::generation_failed || run.final_answer.empty()) {
            ++ds.failed;
            ++out.stats.overall.failed;
            continue;
        }
        if (!match_answers(run.final_answer, src.gold_answer, policy)) {
            ++ds.discarded;
            ++out.stats.overall.discarded;
            continue;
        }
        ++ds.correct;
        ++out.stats.overall.correct;

        AugmentedSample aug;
        aug.source = src;
        aug.generated_answer = run.final_answer;
        if (!run.iterations.empty()) {
            // Recover every round of the final generation from its raw text.
            if (auto trace = parse_trace(run.iterations.back().raw)) {
                aug.rounds = trace->rounds;
            }
            if (aug.rounds.empty()) aug.rounds = {run.iterations.back().round};
            const TraceRound& last = aug.rounds.back();
            aug.reasoning = last.reasoning;
            aug.timeline = last.timeline;
            aug.reflection = last.reflection;
        }
        out.retained.push_back(std::move(aug));
    }
    return out;
}

SftExample format_sft(const AugmentedSample& sample, const PromptTemplates& templates) {
    PromptSpec spec;
    spec.mode = PromptMode::tiser;
    spec.question = sample.source.question;
    spec.context = sample.source.context;

    SftExample out;
    out.prompt = render_prompt(spec, templates);
    for (const auto& round : sample.rounds) {
        out.target += "<reasoning>" + round.reasoning + "<timeline>" + round.timeline +
                      "</timeline><reflection>" + round.reflection +
                      "</reflection></reasoning>";
    }
    if (sample.rounds.empty()) {
        out.target += "<reasoning>" + sample.reasoning + "<timeline>" + sample.timeline +
                      "</timeline><reflection>" + sample.reflection +
                      "</reflection></reasoning>";
    }
    out.target += "<answer>" + sample.source.gold_answer + "</answer>";
    return out;
}

std::vector<SourceSample> load_benchmark(const std::string& path, DatasetKind default_kind) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sample file: " + path);

    std::vector<SourceSample> samples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (!j.is_object())
            throw SchemaError(path + ":" + std::to_string(line_no) + ": not a JSON object");

        SourceSample s;
        auto question = pick_field(j, {"question", "query", "q"});
        auto answer = pick_field(j, {"answer", "gold_answer", "gold", "label"});
        auto context = pick_field(j, {"context", "story", "text", "passage"});
        if (!question || trim(*question).empty())
            throw SchemaError(path + ":" + std::to_string(line_no) + ": missing field 'question'");
        if (!answer || trim(*answer).empty())
            throw SchemaError(path + ":" + std::to_string(line_no) + ": missing field 'answer'");
        if (!context || trim(*context).empty())
            throw SchemaError(path + ":" + std::to_string(line_no) + ": missing field 'context'");
        s.question = *question;
        s.gold_answer = *answer;
        s.context = *context;
        s.id = pick_field(j, {"id", "idx", "sample_id", "uid"})
                   .value_or("line-" + std::to_string(line_no));
        auto dataset = pick_field(j, {"dataset", "source"});
        s.dataset = dataset ? parse_dataset_kind(*dataset) : default_kind;
        samples.push_back(std::move(s));
    }
    return samples;
}

std::string format_build_stats(const BuildStats& stats) {
    std::vector<std::pair<std::string, const DatasetStats*>> columns;
    for (const auto& [name, ds] : stats.per_dataset) columns.push_back({name, &ds});
    columns.push_back({"Overall", &stats.overall});

    std::ostringstream out;
    char cell[64];
    std::snprintf(cell, sizeof(cell), "%-18s", "");
    out << cell;
    for (const auto& [name, ds] : columns) {
        std::snprintf(cell, sizeof(cell), " %16s", name.c_str());
        out << cell;
    }
    out << "\n";

    auto row = [&](const char* label, auto getter) {
        std::snprintf(cell, sizeof(cell), "%-18s", label);
        out << cell;
        for (const auto& [name, ds] : columns) {
            out << getter(*ds);
        }
        out << "\n";
    };
    row("Correctness (%)", [&](const DatasetStats& ds) {
        std::snprintf(cell, sizeof(cell), " %16.1f", ds.correctness_pct());
        return std::string(cell);
    });
    row("Retained", [&](const DatasetStats& ds) {
        std::snprintf(cell, sizeof(cell), " %16ld", ds.retained());
        return std::string(cell);
    });
    row("Discarded", [&](const DatasetStats& ds) {
        std::snprintf(cell, sizeof(cell), " %16ld", ds.discarded);
        return std::string(cell);
    });
    row("Failed", [&](const DatasetStats& ds) {
        std::snprintf(cell, sizeof(cell), " %16ld", ds.failed);
        return std::string(cell);
    });
    row("Total", [&](const DatasetStats& ds) {
        std::snprintf(cell, sizeof(cell), " %16ld", ds.total);
        return std::string(cell);
    });
    return out.str();
}

const char* to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::tgqa: return "tgqa";
        case DatasetKind::tempreason_l2: return "tempreason_l2";
        case DatasetKind::tempreason_l3: return "tempreason_l3";
        case DatasetKind::timeqa_easy: return "timeqa_easy";
        case DatasetKind::timeqa_hard: return "timeqa_hard";
        case DatasetKind::other: return "other";
    }
    return "?";
}

const char* to_string(MatchPolicy policy) {
    return policy == MatchPolicy::exact_normalized ? "exact_normalized" : "em";
}

DatasetKind parse_dataset_kind(std::string_view name) {
    std::string n;
    for (char c : to_lower(name))
        if (std::isalnum(static_cast<unsigned char>(c))) n.push_back(c);
    if (n == "tgqa") return DatasetKind::tgqa;
    if (n == "tempreasonl2" || n == "tempreason2") return DatasetKind::tempreason_l2;
    if (n == "tempreasonl3" || n == "tempreason3") return DatasetKind::tempreason_l3;
    if (n == "timeqaeasy") return DatasetKind::timeqa_easy;
    if (n == "timeqahard") return DatasetKind::timeqa_hard;
    return DatasetKind::other;
}

std::optional<MatchPolicy> parse_match_policy(std::string_view name) {
    std::string n = to_lower(trim(name));
    if (n == "exact_normalized" || n == "exact-normalized")
        return MatchPolicy::exact_normalized;
    if (n == "em") return MatchPolicy::em;
    return std::nullopt;
}

}  // namespace tiser
