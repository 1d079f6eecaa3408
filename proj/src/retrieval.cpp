#include "soprag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "soprag/error.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace {

const ProcedureCard& card_or_throw(const KnowledgeBase& kb, const std::string& sop_id) {
    auto it = kb.cards.find(sop_id);
    if (it == kb.cards.end()) throw Error("unknown sop_id: " + sop_id);
    return it->second;
}

/// Zero one expert's weight and renormalize; if everything vanished, the
/// remaining experts share the mass uniformly.
std::array<double, 3> zero_expert(std::array<double, 3> weights, std::size_t index) {
    weights[index] = 0.0;
    double sum = weights[0] + weights[1] + weights[2];
    if (sum > 0.0) {
        for (double& w : weights) w /= sum;
        return weights;
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] = i == index ? 0.0 : 0.5;
    }
    return weights;
}

} // namespace

std::string to_string(Ablation ablation) {
    switch (ablation) {
        case Ablation::none: return "none";
        case Ablation::no_pc: return "no_pc";
        case Ablation::no_entity: return "no_entity";
        case Ablation::no_causal: return "no_causal";
        case Ablation::no_flow: return "no_flow";
        case Ablation::uniform_weights: return "uniform_weights";
    }
    return "none";
}

Ablation ablation_from_string(const std::string& s) {
    if (s == "none" || s.empty()) return Ablation::none;
    if (s == "no_pc") return Ablation::no_pc;
    if (s == "no_entity") return Ablation::no_entity;
    if (s == "no_causal") return Ablation::no_causal;
    if (s == "no_flow") return Ablation::no_flow;
    if (s == "uniform_weights") return Ablation::uniform_weights;
    throw ConfigError("unknown ablation: " + s);
}

void RetrievalConfig::validate() const {
    if (top_k_anchor < 1) throw ConfigError("top_k_anchor must be >= 1");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must be in [0,1]");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
    if (causal_hops < 1) throw ConfigError("causal_hops must be >= 1");
    if (causal_decay <= 0.0 || causal_decay > 1.0) throw ConfigError("causal_decay must be in (0,1]");
    if (result_list_size < 1) throw ConfigError("result_list_size must be >= 1");
}

std::vector<std::pair<std::string, double>> anchor_topk(const std::string& query,
                                                        const KnowledgeBase& kb,
                                                        const SimilarityProvider& provider,
                                                        int top_k) {
    if (kb.empty()) throw Error("knowledge base is empty");
    EmbeddingVector q = provider.embed(query);
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(kb.cards.size());
    for (const auto& [sop_id, card] : kb.cards) {
        scored.emplace_back(sop_id, clamped_cosine(q, card.embedding));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(scored.size()) > top_k) scored.resize(static_cast<std::size_t>(top_k));
    return scored;
}

double entity_score(const std::vector<std::string>& query_entities, const std::string& sop_id,
                    const KnowledgeBase& kb, const SimilarityProvider& provider, double alpha) {
    card_or_throw(kb, sop_id);
    std::vector<const EntityNode*> linked = kb.entities_for(sop_id);
    if (query_entities.empty() || linked.empty()) return 0.0;

    std::unordered_set<std::string> linked_keys;
    for (const EntityNode* node : linked) linked_keys.insert(node->key);

    double total = 0.0;
    for (const std::string& entity : query_entities) {
        double exact = linked_keys.count(text::normalize_label(entity)) > 0 ? 1.0 : 0.0;
        EmbeddingVector emb = provider.embed(entity);
        double soft = 0.0;
        for (const EntityNode* node : linked) {
            soft = std::max(soft, clamped_cosine(emb, node->embedding));
        }
        total += alpha * exact + (1.0 - alpha) * soft;
    }
    return total / static_cast<double>(query_entities.size());
}

double causal_score(const std::string& query, const std::string& sop_id, const KnowledgeBase& kb,
                    const SimilarityProvider& provider, int hops, double decay) {
    card_or_throw(kb, sop_id);
    if (kb.causal_graph.nodes.empty()) return 0.0;

    // Shortest hop distance from each state to this SOP, walked backwards:
    // resolution edges seed distance 1, transitions add one hop upstream.
    std::unordered_map<std::string, std::vector<std::string>> reverse;
    for (const auto& edge : kb.causal_graph.transitions) {
        reverse[edge.to_key].push_back(edge.from_key);
    }
    std::unordered_map<std::string, int> distance;
    std::queue<std::string> frontier;
    for (const auto& edge : kb.causal_graph.resolutions) {
        if (edge.sop_id != sop_id) continue;
        if (distance.emplace(edge.state_key, 1).second) frontier.push(edge.state_key);
    }
    while (!frontier.empty()) {
        std::string key = std::move(frontier.front());
        frontier.pop();
        int d = distance.at(key);
        if (d >= hops) continue;
        auto it = reverse.find(key);
        if (it == reverse.end()) continue;
        for (const std::string& upstream : it->second) {
            if (distance.emplace(upstream, d + 1).second) frontier.push(upstream);
        }
    }
    if (distance.empty()) return 0.0;

    EmbeddingVector q = provider.embed(query);
    double best = 0.0;
    for (const auto& [key, d] : distance) {
        auto node_it = kb.causal_graph.nodes.find(key);
        if (node_it == kb.causal_graph.nodes.end()) continue;
        double path = std::pow(decay, d - 1);
        best = std::max(best, clamped_cosine(q, node_it->second.embedding) * path);
    }
    return best;
}

double flow_score(const std::string& query, const std::string& sop_id, const KnowledgeBase& kb,
                  const SimilarityProvider& provider) {
    card_or_throw(kb, sop_id);
    auto it = kb.flow_graphs.find(sop_id);
    if (it == kb.flow_graphs.end() || it->second.steps.empty()) return 0.0;
    EmbeddingVector q = provider.embed(query);
    double best = 0.0;
    for (const auto& step : it->second.steps) {
        best = std::max(best, clamped_cosine(q, step.embedding));
    }
    return best;
}

double aggregate_score(double anchor_sim, double r_entity, double r_causal, double r_flow,
                       const std::array<double, 3>& weights, double lambda) {
    double gated = weights[0] * r_entity + weights[1] * r_causal + weights[2] * r_flow;
    return lambda * anchor_sim + (1.0 - lambda) * gated;
}

RetrievalOutput retrieve(const std::string& query, const KnowledgeBase& kb,
                         const SimilarityProvider& provider, const Router& router,
                         const RetrievalConfig& config) {
    if (kb.empty()) throw Error("knowledge base is empty");
    config.validate();

    RetrievalOutput out;
    out.decision = router.route(query, kb);
    out.effective_weights = out.decision.weights;

    double lambda = config.lambda;
    switch (config.ablation) {
        case Ablation::none: break;
        case Ablation::no_pc: lambda = 0.0; break;
        case Ablation::no_entity: out.effective_weights = zero_expert(out.effective_weights, 0); break;
        case Ablation::no_causal: out.effective_weights = zero_expert(out.effective_weights, 1); break;
        case Ablation::no_flow: out.effective_weights = zero_expert(out.effective_weights, 2); break;
        case Ablation::uniform_weights:
            out.effective_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
            break;
    }

    // no_pc scores the whole corpus; otherwise only the anchored candidates.
    std::vector<std::pair<std::string, double>> candidates =
        anchor_topk(query, kb, provider,
                    config.ablation == Ablation::no_pc
                        ? static_cast<int>(kb.cards.size())
                        : config.top_k_anchor);

    out.results.reserve(candidates.size());
    for (const auto& [sop_id, anchor_sim] : candidates) {
        RankedResult result;
        result.sop_id = sop_id;
        result.title = kb.cards.at(sop_id).title;
        result.anchor_sim = anchor_sim;
        result.r_entity =
            entity_score(out.decision.query_entities, sop_id, kb, provider, config.alpha);
        result.r_causal =
            causal_score(query, sop_id, kb, provider, config.causal_hops, config.causal_decay);
        result.r_flow = flow_score(query, sop_id, kb, provider);
        result.weights = out.effective_weights;
        result.aggregate = aggregate_score(result.anchor_sim, result.r_entity, result.r_causal,
                                           result.r_flow, out.effective_weights, lambda);
        out.results.push_back(std::move(result));
    }

    std::sort(out.results.begin(), out.results.end(),
              [](const RankedResult& a, const RankedResult& b) {
                  if (a.aggregate != b.aggregate) return a.aggregate > b.aggregate;
                  if (a.anchor_sim != b.anchor_sim) return a.anchor_sim > b.anchor_sim;
                  return a.sop_id < b.sop_id;
              });
    if (static_cast<int>(out.results.size()) > config.result_list_size) {
        out.results.resize(static_cast<std::size_t>(config.result_list_size));
    }
    for (std::size_t i = 0; i < out.results.size(); ++i) {
        out.results[i].rank = static_cast<int>(i) + 1;
    }
    return out;
}

std::vector<Bm25Result> bm25_retrieve(const std::string& query, const KnowledgeBase& kb,
                                      double k1, double b) {
    if (kb.empty()) throw Error("knowledge base is empty");

    struct DocStats {
        std::string sop_id;
        std::unordered_map<std::string, int> tf;
        double length = 0.0;
    };
    std::vector<DocStats> docs;
    docs.reserve(kb.sops.size());
    std::unordered_map<std::string, int> df;
    double total_length = 0.0;
    for (const auto& [sop_id, sop] : kb.sops) {
        DocStats stats;
        stats.sop_id = sop_id;
        for (const auto& token : text::tokenize_lexical(sop.body)) ++stats.tf[token];
        stats.length = 0.0;
        for (const auto& [term, count] : stats.tf) stats.length += count;
        total_length += stats.length;
        for (const auto& [term, count] : stats.tf) ++df[term];
        docs.push_back(std::move(stats));
    }
    double n = static_cast<double>(docs.size());
    double avgdl = total_length / n;

    std::vector<Bm25Result> results;
    results.reserve(docs.size());
    for (const auto& doc : docs) {
        double score = 0.0;
        for (const auto& term : text::tokenize_lexical(query)) {
            auto df_it = df.find(term);
            if (df_it == df.end()) continue;
            auto tf_it = doc.tf.find(term);
            if (tf_it == doc.tf.end()) continue;
            double idf = std::log(1.0 + (n - df_it->second + 0.5) / (df_it->second + 0.5));
            double f = tf_it->second;
            score += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * doc.length / avgdl));
        }
        results.push_back(Bm25Result{doc.sop_id, score, 0});
    }
    std::sort(results.begin(), results.end(), [](const Bm25Result& a, const Bm25Result& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.sop_id < b.sop_id;
    });
    for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = static_cast<int>(i) + 1;
    return results;
}

nlohmann::json to_json(const RankedResult& result) {
    return {
        {"sop_id", result.sop_id},
        {"title", result.title},
        {"rank", result.rank},
        {"score", result.aggregate},
        {"components",
         {{"anchor", result.anchor_sim},
          {"entity", result.r_entity},
          {"causal", result.r_causal},
          {"flow", result.r_flow}}},
        {"weights",
         {{"entity", result.weights[0]}, {"causal", result.weights[1]}, {"flow", result.weights[2]}}},
    };
}

RankedResult ranked_result_from_json(const nlohmann::json& j) {
    RankedResult result;
    result.sop_id = j.at("sop_id").get<std::string>();
    result.title = j.at("title").get<std::string>();
    result.rank = j.at("rank").get<int>();
    result.aggregate = j.at("score").get<double>();
    const auto& components = j.at("components");
    result.anchor_sim = components.at("anchor").get<double>();
    result.r_entity = components.at("entity").get<double>();
    result.r_causal = components.at("causal").get<double>();
    result.r_flow = components.at("flow").get<double>();
    const auto& weights = j.at("weights");
    result.weights = {weights.at("entity").get<double>(), weights.at("causal").get<double>(),
                      weights.at("flow").get<double>()};
    return result;
}

} // namespace soprag
