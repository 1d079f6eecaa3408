#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "soprag/knowledge_base.hpp"
#include "soprag/router.hpp"

namespace soprag {

enum class Ablation { none, no_pc, no_entity, no_causal, no_flow, uniform_weights };

std::string to_string(Ablation ablation);
Ablation ablation_from_string(const std::string& s);

struct RetrievalConfig {
    int top_k_anchor = 10;      // K: cards activated by the anchor layer
    double lambda = 0.5;        // anchor vs expert balance
    double alpha = 0.5;         // exact-match vs soft-overlap balance (entity expert)
    int causal_hops = 3;        // k: neighborhood search depth
    double causal_decay = 1.0;  // per-extra-hop path decay, 1.0 = pure reachability
    int result_list_size = 10;  // N_res
    Ablation ablation = Ablation::none;

    void validate() const;
};

/// One scored candidate with its full decomposition so the aggregate can be
/// recomputed from the parts.
struct RankedResult {
    std::string sop_id;
    std::string title;
    double anchor_sim = 0.0;
    double r_entity = 0.0;
    double r_causal = 0.0;
    double r_flow = 0.0;
    std::array<double, 3> weights{0.0, 0.0, 0.0}; // effective weights used
    double aggregate = 0.0;
    int rank = 0;
};

struct RetrievalOutput {
    std::vector<RankedResult> results;
    RoutingDecision decision;
    std::array<double, 3> effective_weights{0.0, 0.0, 0.0};
};

/// Exact scan of every card by query similarity; descending, ties by sop_id.
std::vector<std::pair<std::string, double>> anchor_topk(const std::string& query,
                                                        const KnowledgeBase& kb,
                                                        const SimilarityProvider& provider,
                                                        int top_k);

/// Mean over the query entities of alpha * exact-match + (1 - alpha) * best
/// soft similarity against the entities associated with the SOP. Zero when
/// either side is empty.
double entity_score(const std::vector<std::string>& query_entities, const std::string& sop_id,
                    const KnowledgeBase& kb, const SimilarityProvider& provider, double alpha);

/// Max over states of sim(query, state) * decay^(d-1), where d is the
/// shortest directed hop count to the SOP (transitions plus the final
/// resolution edge, which counts as one hop), zero beyond `hops`.
double causal_score(const std::string& query, const std::string& sop_id, const KnowledgeBase& kb,
                    const SimilarityProvider& provider, int hops, double decay);

/// Max over the SOP's flow steps of sim(query, step text).
double flow_score(const std::string& query, const std::string& sop_id, const KnowledgeBase& kb,
                  const SimilarityProvider& provider);

/// lambda * anchor + (1 - lambda) * (w_E * r_entity + w_C * r_causal + w_F * r_flow).
double aggregate_score(double anchor_sim, double r_entity, double r_causal, double r_flow,
                       const std::array<double, 3>& weights, double lambda);

/// The gated pipeline: route, anchor, score the activated candidates, sort
/// by aggregate (ties by anchor similarity then sop_id), truncate.
RetrievalOutput retrieve(const std::string& query, const KnowledgeBase& kb,
                         const SimilarityProvider& provider, const Router& router,
                         const RetrievalConfig& config);

struct Bm25Result {
    std::string sop_id;
    double score = 0.0;
    int rank = 0;
};

/// Okapi BM25 over lowercased, punctuation-split full SOP bodies, with
/// IDF = ln(1 + (N - df + 0.5) / (df + 0.5)). Ties order by sop_id.
std::vector<Bm25Result> bm25_retrieve(const std::string& query, const KnowledgeBase& kb,
                                      double k1 = 1.2, double b = 0.75);

nlohmann::json to_json(const RankedResult& result);
RankedResult ranked_result_from_json(const nlohmann::json& j);

} // namespace soprag
