#include <httplib.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <thread>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tiser/backend.hpp"
#include "tiser/evaluation.hpp"
#include "tiser/trace_protocol.hpp"

using namespace tiser;
using tiser::testfs::read_fixture;

namespace {

std::string temp_path(const char* stem) {
    auto dir = std::filesystem::temp_directory_path() / "tiser_tests";
    std::filesystem::create_directories(dir);
    return (dir / (std::string(stem) + "." + std::to_string(::getpid()) + ".jsonl")).string();
}

std::string tiser_prompt(const std::string& question, const std::string& context) {
    PromptSpec spec;
    spec.mode = PromptMode::tiser;
    spec.question = question;
    spec.context = context;
    return render_prompt(spec);
}

}  // namespace

TEST_CASE("prompt payload extraction inverts render_prompt") {
    std::string q = read_fixture("question_appendix_e.txt");
    std::string c = read_fixture("context_appendix_e.txt");
    auto payload = extract_prompt_payload(tiser_prompt(q, c));
    REQUIRE(payload);
    CHECK(payload->question == q);
    CHECK(payload->context == c);
}

TEST_CASE("synthetic backend emits the solver's answer in a well-formed trace") {
    BackendConfig cfg;
    cfg.kind = BackendKind::synthetic;
    auto backend = make_backend(cfg);

    GenerationRequest req;
    req.prompt = tiser_prompt(read_fixture("question_appendix_e.txt"),
                              read_fixture("context_appendix_e.txt"));
    auto result = backend->generate(req);
    auto trace = parse_trace(result.text);
    REQUIRE(trace);
    CHECK(trace->answer == "Olivia Price was born in Harrisonburg");
    CHECK(validate_trace(*trace, PromptMode::tiser).well_formed);
    CHECK(check_consistency(extract_timeline(*trace)).consistent);
    CHECK(result.token_estimate > 0);
}

TEST_CASE("synthetic backend is deterministic per (seed, prompt)") {
    BackendConfig cfg;
    cfg.kind = BackendKind::synthetic;
    cfg.seed = 17;
    cfg.corruption_rate = 0.5;
    auto backend = make_backend(cfg);
    GenerationRequest req;
    req.prompt = tiser_prompt(read_fixture("question_appendix_g.txt"),
                              read_fixture("context_appendix_g.txt"));
    std::string first = backend->generate(req).text;
    for (int i = 0; i < 5; ++i) CHECK(backend->generate(req).text == first);

    auto other = make_backend(cfg);
    CHECK(other->generate(req).text == first);
}

TEST_CASE("corruption_rate=1 always flips the answer away from gold") {
    BackendConfig cfg;
    cfg.kind = BackendKind::synthetic;
    cfg.corruption_rate = 1.0;
    auto backend = make_backend(cfg);
    GenerationRequest req;
    req.prompt = tiser_prompt(read_fixture("question_appendix_e.txt"),
                              read_fixture("context_appendix_e.txt"));
    auto trace = parse_trace(backend->generate(req).text);
    REQUIRE(trace);
    CHECK(!trace->answer.empty());
    std::vector<std::string> gold = {"Olivia Price was born in Harrisonburg"};
    CHECK(exact_match(trace->answer, gold) == 0);
}

TEST_CASE("corruption statistics stay inside the binomial window") {
    BackendConfig cfg;
    cfg.kind = BackendKind::synthetic;
    cfg.seed = 3;
    cfg.corruption_rate = 0.2;
    auto backend = make_backend(cfg);

    std::string c = read_fixture("context_appendix_e.txt");
    std::vector<std::string> gold = {"Olivia Price was born in Harrisonburg"};
    int corrupted = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        // Distinct prompts: vary a metadata-style suffix line.
        GenerationRequest req;
        req.prompt = tiser_prompt(read_fixture("question_appendix_e.txt"), c) +
                     "\n# sample " + std::to_string(i);
        auto trace = parse_trace(backend->generate(req).text);
        REQUIRE(trace);
        if (exact_match(trace->answer, gold) == 0) ++corrupted;
    }
    double fraction = static_cast<double>(corrupted) / n;
    // 0.2 +- 3*sqrt(0.2*0.8/2000)
    CHECK(fraction > 0.173);
    CHECK(fraction < 0.227);
}

TEST_CASE("scripted backend replays in order and exhausts") {
    BackendConfig cfg;
    cfg.kind = BackendKind::scripted;
    cfg.script = {"one", "two"};
    auto backend = make_backend(cfg);
    GenerationRequest req;
    req.prompt = "p";
    CHECK(backend->generate(req).text == "one");
    CHECK(backend->generate(req).text == "two");
    CHECK_THROWS_AS(backend->generate(req), BackendError);
}

TEST_CASE("record then replay reproduces responses exactly") {
    std::string fixture = temp_path("record_replay");
    std::filesystem::remove(fixture);

    BackendConfig scripted;
    scripted.kind = BackendKind::scripted;
    scripted.script = {"alpha response", "beta response", "gamma response", "alpha rewritten"};
    auto recorder = make_recording_backend(make_backend(scripted), fixture);

    GenerationRequest a, b, c;
    a.prompt = "prompt alpha";
    b.prompt = "prompt beta";
    c.prompt = "prompt gamma";
    CHECK(recorder->generate(a).text == "alpha response");
    CHECK(recorder->generate(b).text == "beta response");
    CHECK(recorder->generate(c).text == "gamma response");
    // Re-recording the same prompt: last write wins on replay.
    CHECK(recorder->generate(a).text == "alpha rewritten");

    BackendConfig replay;
    replay.kind = BackendKind::replay;
    replay.fixture_path = fixture;
    auto replayer = make_backend(replay);
    CHECK(replayer->generate(a).text == "alpha rewritten");
    CHECK(replayer->generate(b).text == "beta response");
    CHECK(replayer->generate(c).text == "gamma response");

    GenerationRequest unknown;
    unknown.prompt = "never recorded";
    try {
        replayer->generate(unknown);
        FAIL("expected FixtureMiss");
    } catch (const BackendError& e) {
        CHECK(e.code == BackendError::Code::fixture_miss);
    }
    std::filesystem::remove(fixture);
}

TEST_CASE("http backend round-trips against a local chat-completion server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        ++hits;
        std::string prompt = body["messages"][0]["content"].get<std::string>();
        nlohmann::json reply = {
            {"choices",
             nlohmann::json::array(
                 {{{"message", {{"role", "assistant"},
                                {"content", "<answer>echo:" + prompt.substr(0, 10) +
                                                "</answer>"}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread serving([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    BackendConfig cfg;
    cfg.kind = BackendKind::http;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.model_name = "test-model";
    cfg.timeout_ms = 5000;
    auto backend = make_backend(cfg);

    GenerationRequest req;
    req.prompt = "abcdefghijklmnop";
    auto result = backend->generate(req);
    CHECK(result.text == "<answer>echo:abcdefghij</answer>");
    CHECK(hits == 1);

    SUBCASE("record over http then replay without the server") {
        std::string fixture = temp_path("http_record");
        std::filesystem::remove(fixture);
        auto recorder = make_recording_backend(backend, fixture);
        GenerationRequest r1, r2, r3;
        r1.prompt = "first prompt";
        r2.prompt = "second prompt";
        r3.prompt = "third prompt";
        std::string t1 = recorder->generate(r1).text;
        std::string t2 = recorder->generate(r2).text;
        std::string t3 = recorder->generate(r3).text;

        BackendConfig replay;
        replay.kind = BackendKind::replay;
        replay.fixture_path = fixture;
        auto replayer = make_backend(replay);
        CHECK(replayer->generate(r1).text == t1);
        CHECK(replayer->generate(r2).text == t2);
        CHECK(replayer->generate(r3).text == t3);
        std::filesystem::remove(fixture);
    }

    server.stop();
    serving.join();
}

TEST_CASE("backend config validation") {
    BackendConfig cfg;
    cfg.kind = BackendKind::http;
    CHECK_THROWS_AS(make_backend(cfg), BackendError);
    cfg.kind = BackendKind::replay;
    CHECK_THROWS_AS(make_backend(cfg), BackendError);
}
