#include "tripweaver/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "nlohmann/json.hpp"

namespace tripweaver {
namespace {

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : std::string();
}

}  // namespace

void LlmClient::Gate::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void LlmClient::Gate::release() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

LlmClient::LlmClient(LlmSettings settings, std::string base_url, std::string api_key)
    : settings_(std::move(settings)), gate_(std::max(1, settings_.max_parallel)) {
    std::string raw = base_url.empty() ? env_or_empty("LLM_BASE_URL") : base_url;
    if (raw.empty()) {
        throw ConfigError(
            "llm: LLM_BASE_URL is not set (required when any stage uses the llm core)");
    }
    while (!raw.empty() && raw.back() == '/') raw.pop_back();
    const auto scheme_end = raw.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("llm: LLM_BASE_URL must start with http:// or https://");
    }
    const auto path_start = raw.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base_url_ = raw;
        path_prefix_.clear();
    } else {
        base_url_ = raw.substr(0, path_start);
        path_prefix_ = raw.substr(path_start);
    }
    api_key_ = api_key.empty() ? env_or_empty("LLM_API_KEY") : api_key;
}

std::string LlmClient::complete(const std::vector<ChatMessage>& messages,
                                const std::string& user_tag) {
    nlohmann::json body{
        {"model", settings_.model},
        {"temperature", settings_.temperature},
        {"user", user_tag},
    };
    auto& msgs = body["messages"] = nlohmann::json::array();
    for (const auto& message : messages) {
        msgs.push_back({{"role", message.role}, {"content", message.content}});
    }
    const std::string payload = body.dump();
    const std::string path = path_prefix_ + "/chat/completions";

    gate_.acquire();
    struct Release {
        Gate& gate;
        ~Release() { gate.release(); }
    } release{gate_};

    const int attempts = std::max(1, settings_.max_retries);
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
        }
        httplib::Client http(base_url_);
        http.set_connection_timeout(10);
        http.set_read_timeout(120);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = http.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw LlmError("llm: request rejected with http " + std::to_string(res->status) +
                           ": " + res->body.substr(0, 200));
        }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("invalid response json: ") + e.what();
            continue;
        }
        if (!reply.contains("choices") || !reply["choices"].is_array() ||
            reply["choices"].empty()) {
            last_error = "response has no choices";
            continue;
        }
        const auto& first = reply["choices"][0];
        if (!first.contains("message") || !first["message"].contains("content") ||
            !first["message"]["content"].is_string()) {
            last_error = "response choice has no message content";
            continue;
        }
        return first["message"]["content"].get<std::string>();
    }
    throw LlmError("llm: " + std::to_string(attempts) + " attempt(s) failed for " + user_tag +
                   " (" + last_error + ")");
}

}  // namespace tripweaver
