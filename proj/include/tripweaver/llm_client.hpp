#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tripweaver/scenario.hpp"
#include "tripweaver/types.hpp"

namespace tripweaver {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

// Minimal chat-completions client over HTTP. The endpoint comes from
// LLM_BASE_URL (e.g. "http://127.0.0.1:8080/v1"), the key from LLM_API_KEY
// (optional for local/mock servers). Transport failures and 429/5xx are
// retried with exponential backoff; at most `max_parallel` requests are in
// flight at any time.
class LlmClient {
public:
    explicit LlmClient(LlmSettings settings, std::string base_url = {},
                       std::string api_key = {});
    virtual ~LlmClient() = default;

    // Returns the assistant message content. `user_tag` is sent as the
    // request's end-user identifier ("agent=3;day=2;stage=trips").
    virtual std::string complete(const std::vector<ChatMessage>& messages,
                                 const std::string& user_tag);

    const LlmSettings& settings() const { return settings_; }
    const std::string& base_url() const { return base_url_; }

protected:
    // For test doubles that override complete() and never touch the wire.
    explicit LlmClient(LlmSettings settings, std::nullptr_t)
        : settings_(std::move(settings)), gate_(std::max(1, settings_.max_parallel)) {}

private:
    class Gate {  // counting semaphore with runtime capacity
    public:
        explicit Gate(int capacity) : available_(capacity) {}
        void acquire();
        void release();

    private:
        std::mutex mutex_;
        std::condition_variable cv_;
        int available_;
    };

    LlmSettings settings_;
    std::string base_url_;     // scheme://host[:port]
    std::string path_prefix_;  // e.g. "/v1"
    std::string api_key_;
    Gate gate_;
};

}  // namespace tripweaver
