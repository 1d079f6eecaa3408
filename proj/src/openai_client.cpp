#include "soprag/openai_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "soprag/error.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace {

using nlohmann::json;

json post_json(const std::string& endpoint, const std::string& path,
               const std::string& api_key, const json& body, int max_retries) {
    std::string last_error;
    for (int attempt = 1; attempt <= max_retries; ++attempt) {
        httplib::Client client(endpoint);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (res && res->status == 200) {
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                last_error = std::string("invalid JSON in response: ") + e.what();
            }
        } else if (res) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        } else {
            last_error = "transport error: " + httplib::to_string(res.error());
        }
        if (attempt < max_retries) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        }
    }
    throw BackendError("POST " + path + " failed after " + std::to_string(max_retries)
                       + " attempts: " + last_error);
}

} // namespace

HttpChatClient::HttpChatClient(std::string endpoint, std::string model,
                               std::string api_key, int max_retries)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      max_retries_(max_retries) {}

std::string HttpChatClient::complete(const std::string& system_prompt,
                                     const std::string& user_prompt) const {
    json body = {
        {"model", model_},
        {"messages",
         {{{"role", "system"}, {"content", system_prompt}},
          {{"role", "user"}, {"content", user_prompt}}}},
    };
    json res = post_json(endpoint_, "/v1/chat/completions", api_key_, body, max_retries_);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed chat-completions response: ") + e.what());
    }
}

HttpEmbeddingsClient::HttpEmbeddingsClient(std::string endpoint, std::string model,
                                           std::string api_key, int max_retries)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      max_retries_(max_retries) {}

std::vector<std::vector<double>> HttpEmbeddingsClient::embed(
    const std::vector<std::string>& inputs) const {
    json body = {{"model", model_}, {"input", inputs}};
    json res = post_json(endpoint_, "/v1/embeddings", api_key_, body, max_retries_);
    std::vector<std::vector<double>> out(inputs.size());
    try {
        const json& data = res.at("data");
        if (data.size() != inputs.size()) {
            throw BackendError("embeddings response has " + std::to_string(data.size())
                               + " vectors for " + std::to_string(inputs.size()) + " inputs");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            const json& item = data[i];
            std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : i;
            if (idx >= out.size()) throw BackendError("embeddings response index out of range");
            out[idx] = item.at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed embeddings response: ") + e.what());
    }
    for (const auto& v : out) {
        if (v.empty()) throw BackendError("embeddings response missing a vector");
    }
    return out;
}

std::string api_key_from_env() {
    const char* key = std::getenv("SOPRAG_API_KEY");
    return key != nullptr ? std::string(key) : std::string();
}

nlohmann::json parse_llm_json(const std::string& content) {
    std::string body = text::trim(content);
    if (body.starts_with("```")) {
        std::size_t first_nl = body.find('\n');
        std::size_t last_fence = body.rfind("```");
        if (first_nl != std::string::npos && last_fence > first_nl) {
            body = text::trim(body.substr(first_nl + 1, last_fence - first_nl - 1));
        }
    }
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ParseError("unparsable LLM response (" + std::string(e.what())
                         + "); raw response: " + content);
    }
}

} // namespace soprag
