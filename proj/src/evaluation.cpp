#include "tiser/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "tiser/text.hpp"

namespace tiser {

std::vector<std::string> normalize_answer(std::string_view s) {
    std::vector<std::string> out;
    for (auto& tok : whitespace_tokens(strip_punct_lower(s))) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        out.push_back(std::move(tok));
    }
    return out;
}

int exact_match(std::string_view prediction, std::span<const std::string> golds,
                EmPolicy policy) {
    if (policy == EmPolicy::raw) {
        for (const auto& gold : golds)
            if (prediction == gold) return 1;
        return 0;
    }
    auto pred = normalize_answer(prediction);
    for (const auto& gold : golds)
        if (pred == normalize_answer(gold)) return 1;
    return 0;
}

namespace {

double single_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    std::map<std::string, long> counts;
    for (const auto& t : gold) ++counts[t];
    long overlap = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(std::string_view prediction, std::span<const std::string> golds) {
    auto pred = normalize_answer(prediction);
    double best = 0.0;
    bool any = false;
    for (const auto& gold : golds) {
        best = std::max(best, single_f1(pred, normalize_answer(gold)));
        any = true;
    }
    return any ? best : 0.0;
}

ScoredPrediction score_prediction(std::string id, std::string prediction,
                                  std::vector<std::string> golds, std::string dataset,
                                  EmPolicy policy) {
    ScoredPrediction s;
    s.id = std::move(id);
    s.prediction = std::move(prediction);
    s.golds = std::move(golds);
    s.dataset = std::move(dataset);
    s.em = exact_match(s.prediction, s.golds, policy);
    s.f1 = token_f1(s.prediction, s.golds);
    return s;
}

EvalReport aggregate(std::span<const ScoredPrediction> scored, EmPolicy policy) {
    EvalReport report;
    report.policy = policy;
    std::map<std::string, std::pair<double, double>> sums;  // dataset -> (em, f1)
    for (const auto& s : scored) {
        auto& score = report.per_dataset[s.dataset];
        auto& sum = sums[s.dataset];
        sum.first += s.em;
        sum.second += s.f1;
        ++score.n;
    }
    double macro_em = 0.0, macro_f1 = 0.0;
    for (auto& [dataset, score] : report.per_dataset) {
        const auto& sum = sums[dataset];
        score.em_pct = 100.0 * sum.first / static_cast<double>(score.n);
        score.f1_pct = 100.0 * sum.second / static_cast<double>(score.n);
        macro_em += score.em_pct;
        macro_f1 += score.f1_pct;
    }
    if (!report.per_dataset.empty()) {
        report.macro_em = macro_em / static_cast<double>(report.per_dataset.size());
        report.macro_f1 = macro_f1 / static_cast<double>(report.per_dataset.size());
    }
    return report;
}

TokenOverheadReport token_overhead(std::span<const PipelineResult> results) {
    TokenOverheadReport report;
    double total = 0, reasoning = 0, timeline = 0, reflection = 0, answer = 0;
    bool any_stage = false;
    for (const auto& r : results) {
        if (r.stop_reason == StopReason::generation_failed) continue;
        ++report.n;
        total += static_cast<double>(r.tokens.total());
        reasoning += static_cast<double>(r.tokens.reasoning);
        timeline += static_cast<double>(r.tokens.timeline);
        reflection += static_cast<double>(r.tokens.reflection);
        answer += static_cast<double>(r.tokens.answer);
        for (const auto& it : r.iterations) {
            if (it.round.has_reasoning || it.round.has_timeline || it.round.has_reflection)
                any_stage = true;
        }
    }
    if (report.n == 0) return report;
    double n = static_cast<double>(report.n);
    report.overall_avg = total / n;
    report.answer_avg = answer / n;
    if (any_stage) {
        report.reasoning_avg = reasoning / n;
        report.timeline_avg = timeline / n;
        report.reflection_avg = reflection / n;
    }
    return report;
}

std::string format_eval_table(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s %8s %8s %8s\n", "Dataset", "EM", "F1", "n");
    out << line;
    for (const auto& [dataset, score] : report.per_dataset) {
        std::snprintf(line, sizeof(line), "%-24s %8.1f %8.1f %8ld\n", dataset.c_str(),
                      score.em_pct, score.f1_pct, score.n);
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-24s %8.1f %8.1f\n", "Macro Avg.", report.macro_em,
                  report.macro_f1);
    out << line;
    out << "(EM policy: " << to_string(report.policy) << ")\n";
    return out.str();
}

std::string format_overhead_table(const TokenOverheadReport& report) {
    std::ostringstream out;
    char line[160];
    auto row = [&](const char* label, const std::optional<double>& value) {
        if (value) {
            std::snprintf(line, sizeof(line), "%-18s %10.2f\n", label, *value);
        } else {
            std::snprintf(line, sizeof(line), "%-18s %10s\n", label, "-");
        }
        out << line;
    };
    std::snprintf(line, sizeof(line), "%-18s %10s\n", "", "Tokens");
    out << line;
    row("Overall average", report.overall_avg);
    row("Reasoning stage", report.reasoning_avg);
    row("Timeline stage", report.timeline_avg);
    row("Reflection stage", report.reflection_avg);
    std::snprintf(line, sizeof(line), "(n=%ld responses)\n", report.n);
    out << line;
    return out.str();
}

const char* to_string(EmPolicy policy) {
    return policy == EmPolicy::normalized ? "normalized" : "raw";
}

std::optional<EmPolicy> parse_em_policy(std::string_view name) {
    std::string n = to_lower(trim(name));
    if (n == "normalized" || n == "em" || n == "exact_normalized") return EmPolicy::normalized;
    if (n == "raw") return EmPolicy::raw;
    return std::nullopt;
}

}  // namespace tiser
