#pragma once

#include <array>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "soprag/knowledge_base.hpp"

namespace soprag {

class ChatClient;

enum class RouterMode { heuristic, llm };

/// The gating decision for one query: intent, the query entities used by the
/// entity expert, and normalized weights [w_entity, w_causal, w_flow].
struct RoutingDecision {
    std::string intent;
    std::vector<std::string> query_entities;
    std::array<double, 3> raw_weights{0.0, 0.0, 0.0};
    std::array<double, 3> weights{0.0, 0.0, 0.0}; // nonnegative, sum to 1
    RouterMode mode_used = RouterMode::heuristic;
};

/// Sum-normalization: each weight divided by the total, uniform (1/3 each)
/// when all raw weights are zero. Throws on negative or non-finite input.
std::array<double, 3> normalize_weights(const std::array<double, 3>& raw);

/// Deterministic cue-counting router. Causal cues: why, cause, caused,
/// root cause, diagnose, reason. Flow cues: how, step, steps, procedure,
/// perform, execute, recover, process. Entity cues: tokens shaped like
/// equipment codes (two or more letters, optional separator, digits) or
/// exactly matching a KB entity label; those tokens become the query entities.
RoutingDecision heuristic_route(const std::string& query, const KnowledgeBase& kb);

/// Append-only CSV sink for per-query routing weights:
/// query_id,w_entity,w_causal,w_flow,intent,mode
class WeightLog {
public:
    explicit WeightLog(std::filesystem::path path);

    void append(const std::string& query_id, const std::array<double, 3>& weights,
                const std::string& intent, const std::string& mode);

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

class Router {
public:
    /// llm mode requires a chat client; on any LLM failure the router degrades
    /// to the heuristic and records the mode actually used.
    explicit Router(RouterMode mode, const ChatClient* chat = nullptr);

    RoutingDecision route(const std::string& query, const KnowledgeBase& kb) const;

    RouterMode mode() const { return mode_; }

private:
    RoutingDecision llm_route(const std::string& query, const KnowledgeBase& kb) const;

    RouterMode mode_;
    const ChatClient* chat_;
};

std::string to_string(RouterMode mode);

} // namespace soprag
