#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tiser {

struct GenerationRequest {
    std::string prompt;
    int max_tokens = 1024;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
    std::map<std::string, std::string> metadata;
};

struct GenerationResult {
    std::string text;
    std::string backend_id;
    long latency_ms = 0;
    long token_estimate = 0;
};

enum class BackendKind { http, replay, scripted, synthetic };

struct BackendConfig {
    BackendKind kind = BackendKind::synthetic;
    std::string endpoint;      // http
    std::string model_name;    // http
    std::string fixture_path;  // replay fixtures or scripted responses
    double corruption_rate = 0.0;  // synthetic only
    uint64_t seed = 0;
    std::vector<std::string> script;  // scripted, used when fixture_path is empty

    long timeout_ms = 120000;
    int max_retries = 3;
    int max_in_flight = 4;
    std::string api_key_env = "TISER_API_KEY";
};

class BackendError : public std::runtime_error {
  public:
    enum class Code { network, fixture_miss, script_exhausted, io, config };

    BackendError(Code code, const std::string& what, bool retryable = false)
        : std::runtime_error(what), code(code), retryable(retryable) {}

    Code code;
    bool retryable;
};

// One generation contract over live HTTP, record/replay, a fixed script, or
// the solver-backed synthetic generator. Implementations are safe to share
// across concurrent pipeline executors.
class Backend {
  public:
    virtual ~Backend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    virtual std::string id() const = 0;
};

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

// Wraps another backend and appends {prompt_sha256, response, backend_id,
// timestamp} JSONL entries so replay can reproduce the session exactly.
std::shared_ptr<Backend> make_recording_backend(std::shared_ptr<Backend> inner,
                                                const std::string& fixture_path);

// Pulls the question and temporal context back out of a rendered prompt;
// the synthetic backend runs the symbolic solver on them.
struct PromptPayload {
    std::string question;
    std::string context;
};
std::optional<PromptPayload> extract_prompt_payload(std::string_view prompt);

const char* to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view name);

}  // namespace tiser
