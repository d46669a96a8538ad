#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "tiser/backend.hpp"
#include "tiser/text.hpp"

namespace tiser {

namespace {

using nlohmann::json;

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/chat/completions by default
};

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw BackendError(BackendError::Code::config, "endpoint must be an http(s) URL: " + url);
    size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        out.base = url;
        out.path = "/v1/chat/completions";
    } else {
        out.base = url.substr(0, path_start);
        out.path = url.substr(path_start);
    }
    return out;
}

// Counting gate for the max-in-flight limit.
class RequestGate {
  public:
    explicit RequestGate(int limit) : limit_(limit > 0 ? limit : 1) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }
    void release() {
        std::lock_guard lock(mutex_);
        --active_;
        cv_.notify_one();
    }

  private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

class HttpBackend : public Backend {
  public:
    explicit HttpBackend(const BackendConfig& config)
        : config_(config), url_(parse_url(config.endpoint)), gate_(config.max_in_flight) {
        if (const char* key = std::getenv(config.api_key_env.c_str())) api_key_ = key;
    }

    GenerationResult generate(const GenerationRequest& request) override {
        gate_.acquire();
        struct Release {
            RequestGate& g;
            ~Release() { g.release(); }
        } release{gate_};

        json body = {{"model", config_.model_name},
                     {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                     {"temperature", request.temperature},
                     {"max_tokens", request.max_tokens}};
        if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

        std::string payload = body.dump();
        std::string last_error = "no attempt made";
        auto start = std::chrono::steady_clock::now();

        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(100L << (attempt - 1)));
            }
            httplib::Client client(url_.base);
            client.set_connection_timeout(config_.timeout_ms / 1000,
                                          (config_.timeout_ms % 1000) * 1000);
            client.set_read_timeout(config_.timeout_ms / 1000,
                                    (config_.timeout_ms % 1000) * 1000);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

            auto res = client.Post(url_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "connection failed: " + httplib::to_string(res.error());
                continue;  // retryable
            }
            if (res->status >= 500) {
                last_error = "server error " + std::to_string(res->status);
                continue;  // retryable
            }
            if (res->status != 200) {
                throw BackendError(BackendError::Code::network,
                                   "request rejected with status " +
                                       std::to_string(res->status) + ": " + res->body);
            }
            auto j = json::parse(res->body, nullptr, false);
            if (!j.is_object() || !j.contains("choices") || j["choices"].empty())
                throw BackendError(BackendError::Code::network,
                                   "malformed completion response: " + res->body);
            const auto& choice = j["choices"][0];
            std::string text;
            if (choice.contains("message") && choice["message"].contains("content")) {
                text = choice["message"]["content"].get<std::string>();
            } else if (choice.contains("text")) {
                text = choice["text"].get<std::string>();
            } else {
                throw BackendError(BackendError::Code::network,
                                   "completion response has no content: " + res->body);
            }
            auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
            GenerationResult out;
            out.text = std::move(text);
            out.backend_id = "http:" + config_.model_name;
            out.latency_ms = elapsed;
            out.token_estimate = count_tokens(out.text);
            return out;
        }
        throw BackendError(BackendError::Code::network,
                           "request failed after " + std::to_string(config_.max_retries + 1) +
                               " attempts: " + last_error,
                           /*retryable=*/true);
    }

    std::string id() const override { return "http:" + config_.model_name; }

  private:
    BackendConfig config_;
    ParsedUrl url_;
    RequestGate gate_;
    std::string api_key_;
};

}  // namespace

std::shared_ptr<Backend> make_http_backend(const BackendConfig& config) {
    return std::make_shared<HttpBackend>(config);
}

}  // namespace tiser
