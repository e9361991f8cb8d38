#include "nsar/llmclient.hpp"

#include <algorithm>
#include <thread>

#include "nsar/errors.hpp"

#include "http_util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace nsar {

TokenBucket::TokenBucket(int requests_per_minute, int burst)
    : per_ms_(requests_per_minute / 60000.0),
      capacity_(std::max(1, burst)),
      tokens_(std::max(1, burst)),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        double elapsed_ms =
            std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed_ms * per_ms_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        double wait_ms = (1.0 - tokens_) / per_ms_;
        lock.unlock();
        std::this_thread::sleep_for(
            std::chrono::milliseconds(static_cast<std::int64_t>(wait_ms) + 1));
        lock.lock();
    }
}

CompletionResult RetryingChatClient::complete(const RenderedPrompt& prompt) {
    auto started = std::chrono::steady_clock::now();
    std::chrono::milliseconds backoff = policy_.initial_backoff;
    int attempt = 0;
    for (;;) {
        ++attempt;
        try {
            AttemptResult r = attempt_once(prompt);
            CompletionResult out;
            out.text = std::move(r.text);
            out.token_usage = r.usage;
            out.attempt_count = attempt;
            out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            return out;
        } catch (const ProviderError& err) {
            if (!err.transient() || attempt > policy_.max_retries) {
                throw TransportError(std::string("completion failed after ") +
                                         std::to_string(attempt) +
                                         " attempt(s): " + err.what(),
                                     attempt);
            }
            if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(static_cast<std::int64_t>(
                static_cast<double>(backoff.count()) * policy_.multiplier));
        }
        // RequestError and ScriptExhaustedError propagate untouched.
    }
}

ScriptedClient::ScriptedClient(std::vector<Item> script, std::chrono::milliseconds backoff)
    : RetryingChatClient({.max_retries = 3, .initial_backoff = backoff, .multiplier = 2.0}),
      items_(script.begin(), script.end()) {}

std::size_t ScriptedClient::remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return items_.size();
}

RetryingChatClient::AttemptResult ScriptedClient::attempt_once(const RenderedPrompt&) {
    Item item;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (items_.empty()) {
            throw ScriptExhaustedError("scripted client has no queued responses left");
        }
        item = std::move(items_.front());
        items_.pop_front();
    }
    if (auto* text = std::get_if<std::string>(&item)) {
        return {.text = std::move(*text), .usage = std::nullopt};
    }
    if (auto* timeout = std::get_if<Timeout>(&item)) {
        throw ProviderError(timeout->message, /*transient=*/true);
    }
    auto& failure = std::get<HttpFailure>(item);
    if (failure.status == 429 || failure.status >= 500) {
        throw ProviderError("scripted HTTP " + std::to_string(failure.status) + ": " +
                                failure.message,
                            /*transient=*/true);
    }
    throw RequestError("scripted HTTP " + std::to_string(failure.status) + ": " +
                           failure.message,
                       failure.status);
}

CompletionResult CallbackClient::complete(const RenderedPrompt& prompt) {
    auto started = std::chrono::steady_clock::now();
    CompletionResult out;
    out.text = fn_(prompt);
    out.attempt_count = 1;
    out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return out;
}

HttpChatClient::HttpChatClient(ModelConfig config)
    : RetryingChatClient({.max_retries = config.max_retries,
                          .initial_backoff = config.initial_backoff,
                          .multiplier = config.backoff_multiplier}),
      config_(std::move(config)) {
    auto url = detail::parse_http_url(config_.endpoint_url);
    host_ = url.host;
    port_ = url.port;
    path_ = url.path;
    if (config_.requests_per_minute > 0) {
        limiter_ = std::make_unique<TokenBucket>(config_.requests_per_minute,
                                                 std::max(1, config_.requests_per_minute / 10));
    }
}

RetryingChatClient::AttemptResult HttpChatClient::attempt_once(
    const RenderedPrompt& prompt) {
    if (limiter_) limiter_->acquire();

    nlohmann::json body;
    body["model"] = config_.model_name;
    body["messages"] = nlohmann::json::array(
        {nlohmann::json{{"role", "user"}, {"content", prompt.text}}});
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_output_tokens;

    httplib::Client client(host_, port_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    client.set_read_timeout(secs.count(), 0);
    client.set_connection_timeout(secs.count(), 0);
    httplib::Headers headers;
    std::string token = detail::bearer_token(config_.api_key, config_.api_key_env);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderError("chat request failed: " + httplib::to_string(res.error()),
                            /*transient=*/true);
    }
    if (res->status == 429 || res->status >= 500) {
        throw ProviderError("chat endpoint returned " + std::to_string(res->status),
                            /*transient=*/true);
    }
    if (res->status != 200) {
        throw RequestError("chat endpoint returned " + std::to_string(res->status) +
                               ": " + res->body,
                           res->status);
    }

    try {
        nlohmann::json parsed = nlohmann::json::parse(res->body);
        AttemptResult out;
        out.text = parsed.at("choices").at(0).at("message").at("content")
                       .get<std::string>();
        if (parsed.contains("usage")) {
            TokenUsage usage;
            usage.prompt_tokens =
                parsed["usage"].value("prompt_tokens", std::int64_t{0});
            usage.completion_tokens =
                parsed["usage"].value("completion_tokens", std::int64_t{0});
            out.usage = usage;
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed chat response: ") + e.what(),
                            /*transient=*/false);
    }
}

}  // namespace nsar
