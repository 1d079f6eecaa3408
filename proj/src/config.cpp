#include "soprag/config.hpp"

#include <fstream>

#include "soprag/error.hpp"
#include "soprag/openai_client.hpp"

namespace soprag {

using nlohmann::json;

void EngineConfig::validate() const {
    retrieval.validate();
    if (embedding.mode != "hash" && embedding.mode != "remote") {
        throw ConfigError("embedding.mode must be 'hash' or 'remote'");
    }
    if (embedding.mode == "hash" && embedding.dim == 0) {
        throw ConfigError("hash embedding requires a positive dim");
    }
    if (embedding.mode == "remote" && (embedding.endpoint.empty() || embedding.model.empty())) {
        throw ConfigError("remote embedding mode requires embedding.endpoint and embedding.model");
    }
    if (router_mode != "heuristic" && router_mode != "llm") {
        throw ConfigError("router.mode must be 'heuristic' or 'llm'");
    }
    if (extraction_mode != "rules" && extraction_mode != "llm") {
        throw ConfigError("extraction.mode must be 'rules' or 'llm'");
    }
    bool needs_llm = router_mode == "llm" || extraction_mode == "llm";
    if (needs_llm && (llm.endpoint.empty() || llm.model.empty())) {
        throw ConfigError("llm router/extraction modes require llm.endpoint and llm.model");
    }
    if (heading_level != 1 && heading_level != 2) {
        throw ConfigError("segmentation.heading_level must be 1 or 2");
    }
    if (merge_threshold < 0.0 || merge_threshold > 1.0) {
        throw ConfigError("merge_threshold must be in [0,1]");
    }
}

json EngineConfig::to_json() const {
    return {
        {"retrieval",
         {{"top_k_anchor", retrieval.top_k_anchor},
          {"lambda", retrieval.lambda},
          {"alpha", retrieval.alpha},
          {"causal_hops", retrieval.causal_hops},
          {"causal_decay", retrieval.causal_decay},
          {"result_list_size", retrieval.result_list_size},
          {"ablation", to_string(retrieval.ablation)}}},
        {"embedding",
         {{"mode", embedding.mode},
          {"dim", embedding.dim},
          {"endpoint", embedding.endpoint},
          {"model", embedding.model}}},
        {"llm", {{"endpoint", llm.endpoint}, {"model", llm.model}}},
        {"router", {{"mode", router_mode}}},
        {"extraction", {{"mode", extraction_mode}}},
        {"segmentation", {{"heading_level", heading_level}}},
        {"merge_threshold", merge_threshold},
    };
}

EngineConfig EngineConfig::from_json(const json& j) {
    EngineConfig config;
    if (j.contains("retrieval")) {
        const json& r = j.at("retrieval");
        config.retrieval.top_k_anchor = r.value("top_k_anchor", config.retrieval.top_k_anchor);
        config.retrieval.lambda = r.value("lambda", config.retrieval.lambda);
        config.retrieval.alpha = r.value("alpha", config.retrieval.alpha);
        config.retrieval.causal_hops = r.value("causal_hops", config.retrieval.causal_hops);
        config.retrieval.causal_decay = r.value("causal_decay", config.retrieval.causal_decay);
        config.retrieval.result_list_size =
            r.value("result_list_size", config.retrieval.result_list_size);
        config.retrieval.ablation = ablation_from_string(r.value("ablation", "none"));
    }
    if (j.contains("embedding")) {
        const json& e = j.at("embedding");
        config.embedding.mode = e.value("mode", config.embedding.mode);
        config.embedding.dim = e.value("dim", config.embedding.dim);
        config.embedding.endpoint = e.value("endpoint", config.embedding.endpoint);
        config.embedding.model = e.value("model", config.embedding.model);
    }
    if (j.contains("llm")) {
        const json& l = j.at("llm");
        config.llm.endpoint = l.value("endpoint", config.llm.endpoint);
        config.llm.model = l.value("model", config.llm.model);
    }
    if (j.contains("router")) config.router_mode = j.at("router").value("mode", config.router_mode);
    if (j.contains("extraction")) {
        config.extraction_mode = j.at("extraction").value("mode", config.extraction_mode);
    }
    if (j.contains("segmentation")) {
        config.heading_level = j.at("segmentation").value("heading_level", config.heading_level);
    }
    config.merge_threshold = j.value("merge_threshold", config.merge_threshold);
    config.validate();
    return config;
}

EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad config file " + path.string() + ": " + e.what());
    }
    return EngineConfig::from_json(j);
}

Engine Engine::from_config(EngineConfig config) {
    config.validate();
    Engine engine;
    engine.config = config;

    std::string api_key = api_key_from_env();
    if (config.embedding.mode == "remote") {
        engine.provider = std::make_unique<RemoteEmbedder>(
            config.embedding.endpoint, config.embedding.model, api_key, config.embedding.dim);
    } else {
        engine.provider = std::make_unique<HashEmbedder>(config.embedding.dim);
    }

    if (!config.llm.endpoint.empty() && !config.llm.model.empty()) {
        engine.chat =
            std::make_unique<HttpChatClient>(config.llm.endpoint, config.llm.model, api_key);
    }

    if (config.extraction_mode == "llm") {
        engine.extraction = std::make_unique<LlmExtractionBackend>(*engine.chat);
        engine.summarizer = std::make_unique<LlmSummarizer>(*engine.chat);
    } else {
        engine.extraction = std::make_unique<RulesExtractionBackend>();
        engine.summarizer = std::make_unique<FirstSentenceSummarizer>();
    }

    engine.router = std::make_unique<Router>(
        config.router_mode == "llm" ? RouterMode::llm : RouterMode::heuristic,
        engine.chat.get());
    return engine;
}

} // namespace soprag
