#include <atomic>
#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/gen.hpp"
#include "tiser/pipeline.hpp"

using namespace tiser;
using tiser::testfs::read_fixture;

namespace {

// A parseable but inconsistent timeline: the interval's end precedes its start.
const char* kInconsistentResponse =
    "<reasoning>maybe<timeline>(the tenure) ends at 1940. (the tenure) starts at "
    "1946.</timeline><reflection>looks fine</reflection></reasoning><answer>draft</answer>";

const char* kConsistentResponse =
    "<reasoning>fixed<timeline>(the tenure) starts at 1940. (the tenure) ends at "
    "1946.</timeline><reflection>looks fine</reflection></reasoning><answer>final</answer>";

std::shared_ptr<Backend> scripted(std::vector<std::string> script) {
    BackendConfig cfg;
    cfg.kind = BackendKind::scripted;
    cfg.script = std::move(script);
    return make_backend(cfg);
}

}  // namespace

TEST_CASE("check_stop policies") {
    PipelineConfig cfg;
    TraceRound clean_round;
    clean_round.reflection = "This reasoning is sound.";
    TraceRound flagged_round;
    flagged_round.reflection = "the conclusion is flawed";

    ConsistencyReport ok{true, {}};
    ConsistencyReport bad{false, {{ViolationCode::unordered, "x"}}};

    cfg.stop_policy = StopPolicy::both;
    CHECK(check_stop(clean_round, ok, cfg));
    CHECK(!check_stop(flagged_round, ok, cfg));
    CHECK(!check_stop(clean_round, bad, cfg));
    CHECK(!check_stop(clean_round, std::nullopt, cfg));

    cfg.stop_policy = StopPolicy::timeline_consistent;
    CHECK(check_stop(flagged_round, ok, cfg));
    TraceRound empty_reflection;
    CHECK(check_stop(empty_reflection, ok, cfg));

    cfg.stop_policy = StopPolicy::reflection_clean;
    CHECK(check_stop(clean_round, std::nullopt, cfg));
    CHECK(!check_stop(flagged_round, ok, cfg));
}

TEST_CASE("reflection flag phrases match the observed transcript language") {
    PipelineConfig cfg;
    CHECK(!reflection_is_clean("Upon reviewing the timeline, I realize the conclusion is flawed.",
                               cfg.reflection_flags));
    CHECK(reflection_is_clean("This reasoning is sound.", cfg.reflection_flags));
    CHECK(reflection_is_clean("", cfg.reflection_flags));
}

TEST_CASE("synthetic backend converges in one iteration on the Amy Johnson case") {
    BackendConfig bc;
    bc.kind = BackendKind::synthetic;
    auto backend = make_backend(bc);
    PipelineConfig cfg;

    auto result = run(read_fixture("question_appendix_e.txt"),
                      read_fixture("context_appendix_e.txt"), *backend, cfg);
    CHECK(result.final_answer == "Olivia Price was born in Harrisonburg");
    CHECK(result.stop_reason == StopReason::converged);
    CHECK(result.iterations.size() == 1);
    CHECK(result.tokens.total() > 0);
    CHECK(result.tokens.total() ==
          result.tokens.reasoning + result.tokens.timeline + result.tokens.reflection +
              result.tokens.answer);
}

TEST_CASE("scripted inconsistent-then-consistent run converges in two iterations") {
    auto backend = scripted({kInconsistentResponse, kConsistentResponse});
    PipelineConfig cfg;
    auto result = run("Which event happened in 1940?", "(the tenure) starts at 1940", *backend,
                      cfg);
    CHECK(result.stop_reason == StopReason::converged);
    REQUIRE(result.iterations.size() == 2);
    CHECK(result.final_answer == "final");
    REQUIRE(result.iterations[0].consistency);
    CHECK(!result.iterations[0].consistency->consistent);
    REQUIRE(result.iterations[1].consistency);
    CHECK(result.iterations[1].consistency->consistent);
}

TEST_CASE("never-consistent script stops at max_iterations") {
    auto backend = scripted(
        {kInconsistentResponse, kInconsistentResponse, kInconsistentResponse,
         kInconsistentResponse});
    PipelineConfig cfg;
    cfg.max_iterations = 3;
    auto result =
        run("Which event happened in 1940?", "(the tenure) starts at 1940", *backend, cfg);
    CHECK(result.stop_reason == StopReason::max_iterations);
    CHECK(result.iterations.size() == 3);
    CHECK(result.final_answer == "draft");
}

TEST_CASE("iteration count never exceeds max_iterations") {
    for (int max = 1; max <= 4; ++max) {
        auto backend = scripted({kInconsistentResponse, kInconsistentResponse,
                                 kInconsistentResponse, kInconsistentResponse,
                                 kInconsistentResponse});
        PipelineConfig cfg;
        cfg.max_iterations = max;
        auto result =
            run("Which event happened in 1940?", "(the tenure) starts at 1940", *backend, cfg);
        CHECK(static_cast<int>(result.iterations.size()) <= max);
    }
}

TEST_CASE("convergence stops further generations") {
    auto backend = scripted({kConsistentResponse, kInconsistentResponse});
    PipelineConfig cfg;
    auto result =
        run("Which event happened in 1940?", "(the tenure) starts at 1940", *backend, cfg);
    CHECK(result.stop_reason == StopReason::converged);
    CHECK(result.iterations.size() == 1);
    // The second scripted response must still be available: no extra call.
    GenerationRequest req;
    req.prompt = "x";
    CHECK(backend->generate(req).text == kInconsistentResponse);
}

TEST_CASE("missing answer tag is a failed generation") {
    auto backend = scripted({"<reasoning>no answer here</reasoning>"});
    PipelineConfig cfg;
    auto result = run("Which event happened in 1940?", "(x) starts at 1940", *backend, cfg);
    CHECK(result.stop_reason == StopReason::generation_failed);
    CHECK(result.final_answer.empty());
    CHECK(!result.error.empty());
}

TEST_CASE("standard mode takes the raw response as the answer") {
    auto backend = scripted({"Seattle Sounders\n"});
    PipelineConfig cfg;
    cfg.mode = PromptMode::standard;
    auto result = run("Which team did Taylor Graham play for in May 2007?",
                      read_fixture("context_appendix_g.txt"), *backend, cfg);
    CHECK(result.stop_reason == StopReason::converged);
    CHECK(result.final_answer == "Seattle Sounders");
    CHECK(result.iterations.size() == 1);
    CHECK(result.tokens.reasoning == 0);
    CHECK(result.tokens.answer == 2);
}

TEST_CASE("revision prompt embeds the original prompt and prior trace") {
    // First response inconsistent; capture the second prompt via a probe.
    class Probe : public Backend {
      public:
        GenerationResult generate(const GenerationRequest& req) override {
            prompts.push_back(req.prompt);
            GenerationResult r;
            r.text = prompts.size() == 1 ? kInconsistentResponse : kConsistentResponse;
            r.backend_id = id();
            return r;
        }
        std::string id() const override { return "probe"; }
        std::vector<std::string> prompts;
    };
    Probe probe;
    PipelineConfig cfg;
    auto result = run("Which event happened in 1940?", "(the tenure) starts at 1940", probe, cfg);
    REQUIRE(probe.prompts.size() == 2);
    CHECK(probe.prompts[1].find(probe.prompts[0]) != std::string::npos);
    CHECK(probe.prompts[1].find("Previous attempt:") != std::string::npos);
    CHECK(probe.prompts[1].find("draft") != std::string::npos);
}

TEST_CASE("multi-call mode runs one generation per stage") {
    BackendConfig bc;
    bc.kind = BackendKind::synthetic;
    auto backend = make_backend(bc);
    PipelineConfig cfg;
    cfg.single_call = false;
    auto result = run(read_fixture("question_appendix_g.txt"),
                      read_fixture("context_appendix_g.txt"), *backend, cfg);
    CHECK(result.stop_reason == StopReason::converged);
    CHECK(result.final_answer == "Seattle Sounders");
    REQUIRE(result.iterations.size() == 1);
    CHECK(result.iterations[0].round.has_timeline);
    CHECK(result.tokens.total() > 0);
}

TEST_CASE("run_batch preserves input order and isolates failures") {
    std::mt19937_64 rng(77);
    std::vector<BatchItem> items;
    for (int i = 0; i < 10; ++i) {
        auto inst = tiser::testgen::make_instance(rng);
        items.push_back({"s" + std::to_string(i), inst.question, inst.context, std::nullopt});
    }
    // Sample 5 gets an unanswerable prompt: empty-ish context.
    items[5].context = "no facts at all here";

    BackendConfig bc;
    bc.kind = BackendKind::synthetic;
    auto backend = make_backend(bc);
    PipelineConfig cfg;

    auto results = run_batch(items, *backend, cfg, 4);
    REQUIRE(results.size() == 10);
    for (size_t i = 0; i < results.size(); ++i) CHECK(results[i].id == items[i].id);
    int finished = 0;
    for (const auto& r : results)
        if (r.stop_reason != StopReason::generation_failed) ++finished;
    CHECK(finished >= 9);
}

TEST_CASE("run_batch is deterministic across parallelism levels") {
    std::mt19937_64 rng(123);
    std::vector<BatchItem> items;
    for (int i = 0; i < 16; ++i) {
        auto inst = tiser::testgen::make_instance(rng);
        items.push_back({"s" + std::to_string(i), inst.question, inst.context, std::nullopt});
    }
    BackendConfig bc;
    bc.kind = BackendKind::synthetic;
    bc.seed = 5;
    bc.corruption_rate = 0.3;
    auto backend = make_backend(bc);
    PipelineConfig cfg;

    auto serial = run_batch(items, *backend, cfg, 1);
    auto parallel = run_batch(items, *backend, cfg, 8);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].final_answer == parallel[i].final_answer);
        CHECK(serial[i].tokens.total() == parallel[i].tokens.total());
        CHECK(serial[i].iterations.size() == parallel[i].iterations.size());
    }
}

TEST_CASE("progress callback reports every sample") {
    std::vector<BatchItem> items(5, {"id", "Which event happened in 1940?",
                                     "(x) starts at 1940", std::nullopt});
    BackendConfig bc;
    bc.kind = BackendKind::synthetic;
    auto backend = make_backend(bc);
    PipelineConfig cfg;
    std::atomic<size_t> calls{0};
    run_batch(items, *backend, cfg, 2, [&](size_t, size_t total) {
        CHECK(total == 5);
        ++calls;
    });
    CHECK(calls == 5);
}
