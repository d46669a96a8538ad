#include <cmath>
#include <random>

#include "doctest.h"
#include "tiser/evaluation.hpp"

using namespace tiser;

namespace {
std::vector<std::string> golds(std::initializer_list<const char*> gs) {
    return {gs.begin(), gs.end()};
}
}  // namespace

TEST_CASE("normalize_answer applies the SQuAD-style rules") {
    CHECK(normalize_answer("The Seattle Sounders.") ==
          std::vector<std::string>{"seattle", "sounders"});
    CHECK(normalize_answer("") == std::vector<std::string>{});
    CHECK(normalize_answer("Ipswich Town") == std::vector<std::string>{"ipswich", "town"});
    CHECK(normalize_answer("a An THE") == std::vector<std::string>{});
}

TEST_CASE("exact_match under both policies") {
    CHECK(exact_match("Seattle Sounders", golds({"seattle sounders"})) == 1);
    CHECK(exact_match("Derby County", golds({"Ipswich Town"})) == 0);
    CHECK(exact_match("x", golds({"x"})) == 1);
    CHECK(exact_match("seattle sounders.", golds({"Seattle Sounders"}),
                      EmPolicy::normalized) == 1);
    CHECK(exact_match("seattle sounders.", golds({"Seattle Sounders"}), EmPolicy::raw) == 0);
    CHECK(exact_match("Seattle Sounders", golds({"Seattle Sounders"}), EmPolicy::raw) == 1);
    // Multiple acceptable golds: max.
    CHECK(exact_match("Sounders", golds({"Seattle Sounders", "Sounders"})) == 1);
}

TEST_CASE("token_f1 matches the worked example") {
    CHECK(token_f1("Seattle Sounders", golds({"Seattle Sounders FC"})) ==
          doctest::Approx(0.8).epsilon(1e-12));
    CHECK(token_f1("same words", golds({"same words"})) == doctest::Approx(1.0));
    CHECK(token_f1("Kilmarnock", golds({"Derby County"})) == doctest::Approx(0.0));
    CHECK(token_f1("", golds({""})) == doctest::Approx(1.0));
    CHECK(token_f1("", golds({"x"})) == doctest::Approx(0.0));
    CHECK(token_f1("x", golds({""})) == doctest::Approx(0.0));
}

TEST_CASE("token_f1 is multiset-based and symmetric") {
    CHECK(token_f1("go go go", golds({"go"})) == doctest::Approx(0.5));  // o=1, p=1/3, r=1
    std::mt19937_64 rng(42);
    const std::vector<std::string> vocab = {"red", "blue", "green", "cat", "dog"};
    for (int trial = 0; trial < 300; ++trial) {
        auto sentence = [&] {
            std::string s;
            size_t n = rng() % 6;
            for (size_t i = 0; i < n; ++i) {
                if (!s.empty()) s += " ";
                s += vocab[rng() % vocab.size()];
            }
            return s;
        };
        std::string a = sentence(), b = sentence();
        double ab = token_f1(a, golds({b.c_str()}));
        double ba = token_f1(b, golds({a.c_str()}));
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("property: em implies f1 == 1") {
    std::mt19937_64 rng(7);
    const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "The", "a.", "42"};
    for (int trial = 0; trial < 10000; ++trial) {
        auto sentence = [&] {
            std::string s;
            size_t n = rng() % 5;
            for (size_t i = 0; i < n; ++i) {
                if (!s.empty()) s += " ";
                s += vocab[rng() % vocab.size()];
            }
            return s;
        };
        std::string pred = sentence(), gold = sentence();
        auto gs = golds({gold.c_str()});
        if (exact_match(pred, gs) == 1) {
            CHECK(token_f1(pred, gs) == doctest::Approx(1.0).epsilon(1e-12));
        }
        double f1 = token_f1(pred, gs);
        bool equal_multisets = [&] {
            auto p = normalize_answer(pred);
            auto g = normalize_answer(gold);
            std::sort(p.begin(), p.end());
            std::sort(g.begin(), g.end());
            return p == g;
        }();
        CHECK((f1 == 1.0) == equal_multisets);
    }
}

TEST_CASE("aggregate reproduces the Table 1 macro row") {
    std::vector<ScoredPrediction> scored;
    // Five datasets with EM percentages {84.5, 85.5, 91.5, 97.9, 96.1}
    // realized as 1000-sample datasets with that many hits.
    const std::pair<const char*, int> sets[] = {{"tgqa", 845},
                                                {"tempreason_l2", 855},
                                                {"tempreason_l3", 915},
                                                {"timeqa_easy", 979},
                                                {"timeqa_hard", 961}};
    for (const auto& [name, hits] : sets) {
        for (int i = 0; i < 1000; ++i) {
            ScoredPrediction s;
            s.dataset = name;
            s.em = i < hits ? 1 : 0;
            s.f1 = s.em;
            scored.push_back(s);
        }
    }
    auto report = aggregate(scored);
    CHECK(report.per_dataset["tgqa"].em_pct == doctest::Approx(84.5));
    CHECK(report.macro_em == doctest::Approx(91.1).epsilon(1e-9));

    SUBCASE("macro equals the mean of per-dataset values") {
        double mean = 0;
        for (const auto& [name, score] : report.per_dataset) mean += score.em_pct;
        mean /= static_cast<double>(report.per_dataset.size());
        CHECK(report.macro_em == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("aggregate of two datasets at 100 and 0 gives macro 50") {
    std::vector<ScoredPrediction> scored;
    ScoredPrediction hit;
    hit.dataset = "a";
    hit.em = 1;
    hit.f1 = 1.0;
    ScoredPrediction miss;
    miss.dataset = "b";
    miss.em = 0;
    miss.f1 = 0.0;
    scored = {hit, hit, miss, miss, miss};
    auto report = aggregate(scored);
    CHECK(report.macro_em == doctest::Approx(50.0));
    CHECK(report.per_dataset["a"].n == 2);
    CHECK(report.per_dataset["b"].n == 3);

    SUBCASE("single dataset macro equals that dataset") {
        std::vector<ScoredPrediction> one = {hit, miss};
        one[1].dataset = "a";
        auto r = aggregate(one);
        CHECK(r.macro_em == doctest::Approx(r.per_dataset["a"].em_pct));
    }
}

TEST_CASE("token overhead over standard-mode results") {
    std::vector<PipelineResult> results(3);
    for (auto& r : results) {
        r.mode = PromptMode::standard;
        r.tokens.answer = 4;
        IterationRecord rec;
        rec.tokens.answer = 4;
        r.iterations.push_back(rec);
    }
    auto report = token_overhead(results);
    CHECK(report.overall_avg == doctest::Approx(4.0));
    CHECK(report.answer_avg == doctest::Approx(4.0));
    CHECK(!report.reasoning_avg);
    CHECK(!report.timeline_avg);
    CHECK(!report.reflection_avg);
    CHECK(report.n == 3);
}

TEST_CASE("token overhead accounting identity on tiser-style results") {
    std::vector<PipelineResult> results;
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20; ++i) {
        PipelineResult r;
        IterationRecord rec;
        rec.round.has_reasoning = rec.round.has_timeline = rec.round.has_reflection = true;
        rec.tokens.reasoning = static_cast<long>(rng() % 40);
        rec.tokens.timeline = static_cast<long>(rng() % 30);
        rec.tokens.reflection = static_cast<long>(rng() % 50);
        rec.tokens.answer = static_cast<long>(rng() % 8);
        r.tokens = rec.tokens;
        r.iterations.push_back(rec);
        results.push_back(std::move(r));
    }
    auto report = token_overhead(results);
    REQUIRE(report.reasoning_avg);
    CHECK(report.overall_avg == doctest::Approx(*report.reasoning_avg + *report.timeline_avg +
                                                *report.reflection_avg + report.answer_avg)
                                    .epsilon(1e-9));
    // Failed runs are excluded.
    results.push_back(PipelineResult{});
    results.back().stop_reason = StopReason::generation_failed;
    CHECK(token_overhead(results).n == 20);
}

TEST_CASE("report tables render the expected layouts") {
    EvalReport er;
    er.per_dataset["tgqa"] = {84.5, 94.2, 100};
    er.macro_em = 84.5;
    er.macro_f1 = 94.2;
    std::string table = format_eval_table(er);
    CHECK(table.find("Macro Avg.") != std::string::npos);
    CHECK(table.find("84.5") != std::string::npos);

    TokenOverheadReport tr;
    tr.overall_avg = 94.74;
    tr.reasoning_avg = 30.27;
    tr.timeline_avg = 23.62;
    tr.reflection_avg = 49.02;
    tr.n = 100;
    std::string overhead = format_overhead_table(tr);
    CHECK(overhead.find("Overall average") != std::string::npos);
    CHECK(overhead.find("Reasoning stage") != std::string::npos);
    CHECK(overhead.find("Timeline stage") != std::string::npos);
    CHECK(overhead.find("Reflection stage") != std::string::npos);
    CHECK(overhead.find("94.74") != std::string::npos);
}
