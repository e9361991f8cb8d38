#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nsar/prompts.hpp"

namespace nsar {

struct ModelConfig {
    std::string endpoint_url; // e.g. http://host:port/v1/chat/completions
    std::string model_name;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{250};
    double backoff_multiplier = 2.0;
    std::string api_key;                       // literal token, or
    std::string api_key_env = "NSAR_API_KEY";  // read from this env var
    /// Requests per minute across this client; 0 disables rate limiting.
    int requests_per_minute = 0;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct CompletionResult {
    std::string text;
    std::chrono::milliseconds latency{0};
    std::optional<TokenUsage> token_usage;
    int attempt_count = 1;
};

/// Uniform chat-completion client. complete() retries transient failures
/// (HTTP 429/5xx, timeouts) with exponential backoff up to max_retries and
/// never duplicates a successful completion.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual CompletionResult complete(const RenderedPrompt& prompt) = 0;
};

/// Token-bucket limiter shared by all calls on one client. acquire() blocks
/// until a slot is free.
class TokenBucket {
public:
    TokenBucket(int requests_per_minute, int burst);
    void acquire();

private:
    double per_ms_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

/// Shared retry/backoff loop; concrete clients implement one attempt.
class RetryingChatClient : public ChatClient {
public:
    CompletionResult complete(const RenderedPrompt& prompt) final;

protected:
    struct RetryPolicy {
        int max_retries = 3;
        std::chrono::milliseconds initial_backoff{250};
        double multiplier = 2.0;
    };
    explicit RetryingChatClient(RetryPolicy policy) : policy_(policy) {}

    struct AttemptResult {
        std::string text;
        std::optional<TokenUsage> usage;
    };
    /// One request. Throw ProviderError(transient=true) for retryable
    /// failures, RequestError for non-retryable ones.
    virtual AttemptResult attempt_once(const RenderedPrompt& prompt) = 0;

private:
    RetryPolicy policy_;
};

/// Scripted test client: returns queued responses in order; failure markers
/// are consumed exactly once per retry. An exhausted script throws
/// ScriptExhaustedError.
class ScriptedClient : public RetryingChatClient {
public:
    struct Timeout {
        std::string message = "scripted timeout";
    };
    struct HttpFailure {
        int status = 500;
        std::string message = "scripted http failure";
    };
    using Item = std::variant<std::string, Timeout, HttpFailure>;

    explicit ScriptedClient(std::vector<Item> script,
                            std::chrono::milliseconds backoff = {});

    std::size_t remaining() const;

protected:
    AttemptResult attempt_once(const RenderedPrompt& prompt) override;

private:
    mutable std::mutex mutex_;
    std::deque<Item> items_;
};

/// Computes each response from the prompt; handy for closed-loop fixtures.
class CallbackClient : public ChatClient {
public:
    using Fn = std::function<std::string(const RenderedPrompt&)>;
    explicit CallbackClient(Fn fn) : fn_(std::move(fn)) {}
    CompletionResult complete(const RenderedPrompt& prompt) override;

private:
    Fn fn_;
};

/// OpenAI-style chat JSON dialect over HTTP:
/// POST {model, messages: [{role, content}], temperature, max_tokens}
///   -> {choices: [{message: {content}}], usage}.
class HttpChatClient : public RetryingChatClient {
public:
    explicit HttpChatClient(ModelConfig config);

protected:
    AttemptResult attempt_once(const RenderedPrompt& prompt) override;

private:
    ModelConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_;
    std::unique_ptr<TokenBucket> limiter_;
};

}  // namespace nsar
