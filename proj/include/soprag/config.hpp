#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "soprag/extraction.hpp"
#include "soprag/retrieval.hpp"
#include "soprag/router.hpp"
#include "soprag/similarity.hpp"

namespace soprag {

class HttpChatClient;

struct EmbeddingSettings {
    std::string mode = "hash"; // hash | remote
    std::size_t dim = 256;     // hash dimension; expected dim in remote mode (0 = provider-defined)
    std::string endpoint;
    std::string model;
};

struct LlmSettings {
    std::string endpoint;
    std::string model;
};

struct EngineConfig {
    RetrievalConfig retrieval;
    EmbeddingSettings embedding;
    LlmSettings llm;
    std::string router_mode = "heuristic";   // heuristic | llm
    std::string extraction_mode = "rules";   // rules | llm
    int heading_level = 1;
    double merge_threshold = 0.9;

    void validate() const;
    nlohmann::json to_json() const;
    static EngineConfig from_json(const nlohmann::json& j);
};

/// JSON config file; missing fields keep their defaults. Secrets come from
/// the environment (SOPRAG_API_KEY), never from the file.
EngineConfig load_config(const std::filesystem::path& path);

/// Everything assembled from one config: provider, chat client (when any
/// remote mode needs it), extraction backend, summarizer, and router.
struct Engine {
    EngineConfig config;
    std::unique_ptr<SimilarityProvider> provider;
    std::unique_ptr<HttpChatClient> chat;
    std::unique_ptr<ExtractionBackend> extraction;
    std::unique_ptr<Summarizer> summarizer;
    std::unique_ptr<Router> router;

    static Engine from_config(EngineConfig config);
};

} // namespace soprag
