#include "tiser/backend.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tiser/context_parser.hpp"
#include "tiser/solver.hpp"
#include "tiser/text.hpp"

namespace tiser {

std::shared_ptr<Backend> make_http_backend(const BackendConfig& config);  // backend_http.cpp

namespace {

using nlohmann::json;

GenerationResult make_result(std::string text, std::string backend_id, long latency_ms) {
    GenerationResult r;
    r.token_estimate = count_tokens(text);
    r.text = std::move(text);
    r.backend_id = std::move(backend_id);
    r.latency_ms = latency_ms;
    return r;
}

class ReplayBackend : public Backend {
  public:
    explicit ReplayBackend(const std::string& fixture_path) : path_(fixture_path) {
        std::ifstream in(fixture_path);
        if (!in)
            throw BackendError(BackendError::Code::io,
                               "cannot open fixture file: " + fixture_path);
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            auto j = json::parse(line, nullptr, false);
            if (!j.is_object() || !j.contains("prompt_sha256") || !j.contains("response"))
                throw BackendError(BackendError::Code::io,
                                   fixture_path + ":" + std::to_string(line_no) +
                                       ": malformed fixture entry");
            // Last write wins on re-recorded prompts.
            entries_[j["prompt_sha256"].get<std::string>()] = j["response"].get<std::string>();
        }
    }

    GenerationResult generate(const GenerationRequest& request) override {
        std::string key = sha256_hex(request.prompt);
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw BackendError(BackendError::Code::fixture_miss,
                               "no recorded response for prompt hash " + key);
        return make_result(it->second, id(), 0);
    }

    std::string id() const override { return "replay:" + path_; }

  private:
    std::string path_;
    std::map<std::string, std::string> entries_;
};

class ScriptedBackend : public Backend {
  public:
    explicit ScriptedBackend(std::vector<std::string> script) : script_(std::move(script)) {}

    GenerationResult generate(const GenerationRequest&) override {
        size_t i;
        {
            std::lock_guard lock(mutex_);
            i = next_++;
        }
        if (i >= script_.size())
            throw BackendError(BackendError::Code::script_exhausted,
                               "script exhausted after " + std::to_string(script_.size()) +
                                   " responses");
        return make_result(script_[i], id(), 0);
    }

    std::string id() const override { return "scripted"; }

  private:
    std::vector<std::string> script_;
    std::mutex mutex_;
    size_t next_ = 0;
};

// Produces a well-formed TISER trace by solving the embedded question with
// the symbolic solver; flips the answer to a wrong candidate with
// probability corruption_rate, decided per prompt hash so outcomes are
// independent of request order.
class SyntheticBackend : public Backend {
  public:
    explicit SyntheticBackend(const BackendConfig& config)
        : seed_(config.seed), corruption_rate_(config.corruption_rate) {}

    GenerationResult generate(const GenerationRequest& request) override {
        auto payload = extract_prompt_payload(request.prompt);
        if (!payload)
            throw BackendError(BackendError::Code::config,
                               "prompt lacks Question:/Temporal Context: markers");

        ParsedContext parsed = parse_context(payload->context);
        SolverResult solved = solve(payload->question, payload->context);
        std::string answer = solved.ok() ? solved.answer->answer : "unknown";

        bool corrupt = hash_unit(seed_, request.prompt, 0) < corruption_rate_;
        if (corrupt) answer = corrupt_answer(request.prompt, payload->question, parsed, answer);

        return make_result(render_trace(*payload, parsed, answer), id(), 0);
    }

    std::string id() const override {
        std::ostringstream ss;
        ss << "synthetic(seed=" << seed_ << ",corruption=" << corruption_rate_ << ")";
        return ss.str();
    }

  private:
    std::string corrupt_answer(const std::string& prompt, const std::string& question,
                               const ParsedContext& parsed, const std::string& answer) const {
        std::vector<std::string> pool;
        auto add = [&](const std::string& s) {
            if (s.empty()) return;
            // Containment either way could still normalize-match the gold.
            if (fuzzy_contains(s, answer)) return;
            if (std::find(pool.begin(), pool.end(), s) == pool.end()) pool.push_back(s);
        };
        if (auto rank = parse_rank_query(question)) {
            for (const auto& c : rank->candidates) add(c);
        }
        for (const auto& f : parsed.facts) add(f.object);
        for (const auto& f : parsed.facts) add(f.statement);
        if (pool.empty()) return "not " + answer;
        size_t pick = static_cast<size_t>(hash_unit(seed_, prompt, 1) *
                                          static_cast<double>(pool.size()));
        if (pick >= pool.size()) pick = pool.size() - 1;
        return pool[pick];
    }

    std::string render_trace(const PromptPayload& payload, const ParsedContext& parsed,
                             const std::string& answer) const {
        // Timeline text: the parsed facts in chronological order, rendered in
        // their own grammar so extract_timeline can read them back.
        std::string timeline_text;
        if (!parsed.facts.empty()) {
            ParsedContext ordered = parsed;
            std::stable_sort(ordered.facts.begin(), ordered.facts.end(),
                             [](const TemporalFact& a, const TemporalFact& b) {
                                 auto ka = a.start ? a.start->sort_key() : a.end->sort_key();
                                 auto kb = b.start ? b.start->sort_key() : b.end->sort_key();
                                 return std::tuple(ka, a.source_index) <
                                        std::tuple(kb, b.source_index);
                             });
            ordered.residual.clear();
            timeline_text = render_context(ordered);
        } else {
            timeline_text = payload.context;
        }

        std::string reasoning =
            "The question is: " + payload.question + " The context states " +
            std::to_string(parsed.facts.size()) +
            " temporal facts. Ordering them by their years and applying the question's "
            "constraint selects the answer directly.";
        std::string reflection =
            "The timeline follows the stated facts and the reasoning is sound.";

        return "<reasoning>" + reasoning + "<timeline>" + timeline_text +
               "</timeline><reflection>" + reflection + "</reflection></reasoning><answer>" +
               answer + "</answer>";
    }

    uint64_t seed_;
    double corruption_rate_;
};

class RecordingBackend : public Backend {
  public:
    RecordingBackend(std::shared_ptr<Backend> inner, std::string fixture_path)
        : inner_(std::move(inner)), path_(std::move(fixture_path)) {}

    GenerationResult generate(const GenerationRequest& request) override {
        GenerationResult result = inner_->generate(request);
        json entry = {{"prompt_sha256", sha256_hex(request.prompt)},
                      {"response", result.text},
                      {"backend_id", result.backend_id},
                      {"timestamp", iso8601_utc_now()}};
        std::lock_guard lock(mutex_);
        std::ofstream out(path_, std::ios::app);
        if (!out)
            throw BackendError(BackendError::Code::io, "cannot append to fixture: " + path_);
        out << entry.dump() << "\n";
        return result;
    }

    std::string id() const override { return inner_->id() + "+record"; }

  private:
    std::shared_ptr<Backend> inner_;
    std::string path_;
    std::mutex mutex_;
};

std::vector<std::string> load_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BackendError(BackendError::Code::io, "cannot open script file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto j = json::parse(ss.str(), nullptr, false);
    if (j.is_array()) {
        std::vector<std::string> script;
        for (const auto& item : j) {
            if (!item.is_string())
                throw BackendError(BackendError::Code::io,
                                   "script file must be a JSON array of strings: " + path);
            script.push_back(item.get<std::string>());
        }
        return script;
    }
    throw BackendError(BackendError::Code::io,
                       "script file must be a JSON array of strings: " + path);
}

}  // namespace

std::optional<PromptPayload> extract_prompt_payload(std::string_view prompt) {
    std::string p(prompt);
    size_t q = p.find("Question:");
    if (q == std::string::npos) return std::nullopt;
    size_t c = p.find("Temporal Context:", q);
    if (c == std::string::npos) return std::nullopt;
    PromptPayload out;
    out.question = trim(p.substr(q + 9, c - q - 9));
    // Revision and staged prompts append material after a "---" separator.
    size_t stop = p.find("\n\n---", c);
    if (stop == std::string::npos) stop = p.size();
    out.context = trim(p.substr(c + 17, stop - c - 17));
    if (out.question.empty() || out.context.empty()) return std::nullopt;
    return out;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
    switch (config.kind) {
        case BackendKind::http:
            if (config.endpoint.empty() || config.model_name.empty())
                throw BackendError(BackendError::Code::config,
                                   "http backend requires an endpoint and a model name");
            return make_http_backend(config);
        case BackendKind::replay:
            if (config.fixture_path.empty())
                throw BackendError(BackendError::Code::config,
                                   "replay backend requires a fixture path");
            return std::make_shared<ReplayBackend>(config.fixture_path);
        case BackendKind::scripted: {
            auto script = config.script;
            if (script.empty() && !config.fixture_path.empty())
                script = load_script_file(config.fixture_path);
            return std::make_shared<ScriptedBackend>(std::move(script));
        }
        case BackendKind::synthetic:
            return std::make_shared<SyntheticBackend>(config);
    }
    throw BackendError(BackendError::Code::config, "unknown backend kind");
}

std::shared_ptr<Backend> make_recording_backend(std::shared_ptr<Backend> inner,
                                                const std::string& fixture_path) {
    return std::make_shared<RecordingBackend>(std::move(inner), fixture_path);
}

const char* to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::http: return "http";
        case BackendKind::replay: return "replay";
        case BackendKind::scripted: return "scripted";
        case BackendKind::synthetic: return "synthetic";
    }
    return "?";
}

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
    std::string n = to_lower(trim(name));
    if (n == "http") return BackendKind::http;
    if (n == "replay") return BackendKind::replay;
    if (n == "scripted") return BackendKind::scripted;
    if (n == "synthetic") return BackendKind::synthetic;
    return std::nullopt;
}

}  // namespace tiser
