#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "soprag/retrieval.hpp"

namespace soprag {

class ChatClient;
class WeightLog;

enum class QueryCategory { entity, causal, flow, mixed };

std::string to_string(QueryCategory category);
QueryCategory query_category_from_string(const std::string& s);

struct QueryRecord {
    std::string query_id;
    std::string query;
    std::string gold_sop_id;
    QueryCategory category = QueryCategory::mixed;

    bool operator==(const QueryRecord&) const = default;
};

struct MetricBlock {
    std::size_t count = 0;
    double mrr = 0.0;
    double acc1 = 0.0;
    double acc3 = 0.0;
    double acc5 = 0.0;
};

struct PerQueryOutcome {
    std::string query_id;
    std::string gold_sop_id;
    QueryCategory category = QueryCategory::mixed;
    std::optional<int> rank; // within the truncated result list; nullopt = absent
    std::array<double, 3> weights{0.0, 0.0, 0.0};
    std::string intent;
    std::string mode;
};

struct EvalReport {
    MetricBlock overall;
    std::map<std::string, MetricBlock> per_category;
    std::vector<PerQueryOutcome> per_query; // sorted by query_id
    std::string ablation;
    int truncation_depth = 0; // N_res used for rank truncation
    nlohmann::json config_snapshot;
};

/// Mean reciprocal rank; an absent gold contributes 0. Errors on empty input.
double mrr(const std::vector<std::optional<int>>& ranks);

/// Fraction of queries whose gold rank is <= k (inclusive).
double acc_at_k(const std::vector<std::optional<int>>& ranks, int k);

/// Run every query through the pipeline under config.ablation, collect gold
/// ranks and metrics. Unknown gold ids fail before any retrieval; routing
/// weights go to the weight log when one is supplied.
EvalReport run_eval(const KnowledgeBase& kb, const SimilarityProvider& provider,
                    const Router& router, const std::vector<QueryRecord>& queries,
                    const RetrievalConfig& config, WeightLog* weight_log = nullptr);

enum class QueryGenMode { template_mode, llm };

/// Deterministic template mode cycles entity/causal/flow/mixed templates per
/// SOP, falling back to the mixed template when a SOP lacks the needed
/// element. LLM mode asks for per_sop scenario-driven questions.
std::vector<QueryRecord> generate_queries(const KnowledgeBase& kb, int per_sop,
                                          QueryGenMode mode, const ChatClient* chat = nullptr);

struct QualityVerdict {
    int has_step_by_step = 0;
    int is_precise = 0;
    int is_concise = 0;
    int is_clear = 0;
    double score = 0.0; // mean of the four binaries
    std::string reasoning;
    bool score_adjusted = false; // judge-reported score disagreed and was recomputed
};

/// LLM-judged answer quality; judging has no offline mode, so a null chat
/// client is an error. A reported score that disagrees with the mean of the
/// binaries is recomputed and flagged.
QualityVerdict judge_sop_quality(const std::string& query, const std::string& answer,
                                 const std::string& gold_sop_body, const ChatClient* chat);

std::vector<QueryRecord> load_queries(const std::filesystem::path& path);
void save_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path);

nlohmann::json to_json(const EvalReport& report);
void save_report(const EvalReport& report, const std::filesystem::path& path);

} // namespace soprag
