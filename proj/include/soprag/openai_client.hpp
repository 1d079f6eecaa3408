#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace soprag {

/// Chat-completions contract; modules depending on an LLM take this
/// interface so tests can substitute canned responses.
class ChatClient {
public:
    virtual ~ChatClient() = default;

    /// Returns the assistant message content. Throws BackendError on failure.
    virtual std::string complete(const std::string& system_prompt,
                                 const std::string& user_prompt) const = 0;
};

/// OpenAI-compatible chat client: POST {endpoint}/v1/chat/completions.
class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(std::string endpoint, std::string model, std::string api_key,
                   int max_retries = 3);

    std::string complete(const std::string& system_prompt,
                         const std::string& user_prompt) const override;

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
    int max_retries_;
};

/// OpenAI-compatible embeddings client: POST {endpoint}/v1/embeddings.
class HttpEmbeddingsClient {
public:
    HttpEmbeddingsClient(std::string endpoint, std::string model, std::string api_key,
                         int max_retries = 3);

    /// One raw (un-normalized) vector per input, in input order.
    std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs) const;

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
    int max_retries_;
};

/// Bearer token for remote backends, from SOPRAG_API_KEY (empty if unset).
std::string api_key_from_env();

/// Parse a structured LLM reply: tolerates markdown code fences around the
/// JSON payload. Throws ParseError carrying the raw content on failure.
nlohmann::json parse_llm_json(const std::string& content);

} // namespace soprag
