#include "soprag/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "soprag/error.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/prompts.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace {

using nlohmann::json;

MetricBlock metrics_for(const std::vector<std::optional<int>>& ranks) {
    MetricBlock block;
    block.count = ranks.size();
    if (ranks.empty()) return block;
    block.mrr = mrr(ranks);
    block.acc1 = acc_at_k(ranks, 1);
    block.acc3 = acc_at_k(ranks, 3);
    block.acc5 = acc_at_k(ranks, 5);
    return block;
}

json metric_block_to_json(const MetricBlock& block) {
    return {{"count", block.count},
            {"mrr", block.mrr},
            {"acc@1", block.acc1},
            {"acc@3", block.acc3},
            {"acc@5", block.acc5}};
}

} // namespace

std::string to_string(QueryCategory category) {
    switch (category) {
        case QueryCategory::entity: return "entity";
        case QueryCategory::causal: return "causal";
        case QueryCategory::flow: return "flow";
        case QueryCategory::mixed: return "mixed";
    }
    return "mixed";
}

QueryCategory query_category_from_string(const std::string& s) {
    if (s == "entity") return QueryCategory::entity;
    if (s == "causal") return QueryCategory::causal;
    if (s == "flow") return QueryCategory::flow;
    if (s == "mixed") return QueryCategory::mixed;
    throw ParseError("unknown query category: " + s);
}

double mrr(const std::vector<std::optional<int>>& ranks) {
    if (ranks.empty()) throw Error("mrr over an empty rank list");
    double total = 0.0;
    for (const auto& rank : ranks) {
        if (rank.has_value()) total += 1.0 / static_cast<double>(*rank);
    }
    return total / static_cast<double>(ranks.size());
}

double acc_at_k(const std::vector<std::optional<int>>& ranks, int k) {
    if (ranks.empty()) throw Error("acc@k over an empty rank list");
    if (k < 1) throw Error("acc@k requires k >= 1");
    std::size_t hits = 0;
    for (const auto& rank : ranks) {
        if (rank.has_value() && *rank <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

EvalReport run_eval(const KnowledgeBase& kb, const SimilarityProvider& provider,
                    const Router& router, const std::vector<QueryRecord>& queries,
                    const RetrievalConfig& config, WeightLog* weight_log) {
    if (queries.empty()) throw Error("no queries to evaluate");
    for (const auto& q : queries) {
        if (kb.cards.find(q.gold_sop_id) == kb.cards.end()) {
            throw Error("gold sop_id not in index: " + q.gold_sop_id + " (query " + q.query_id
                        + ")");
        }
    }

    std::vector<PerQueryOutcome> outcomes;
    outcomes.reserve(queries.size());
    for (const auto& q : queries) {
        RetrievalOutput output = retrieve(q.query, kb, provider, router, config);
        PerQueryOutcome outcome;
        outcome.query_id = q.query_id;
        outcome.gold_sop_id = q.gold_sop_id;
        outcome.category = q.category;
        for (const auto& result : output.results) {
            if (result.sop_id == q.gold_sop_id) {
                outcome.rank = result.rank;
                break;
            }
        }
        outcome.weights = output.effective_weights;
        outcome.intent = output.decision.intent;
        outcome.mode = to_string(output.decision.mode_used);
        outcomes.push_back(std::move(outcome));
    }
    std::sort(outcomes.begin(), outcomes.end(),
              [](const PerQueryOutcome& a, const PerQueryOutcome& b) {
                  return a.query_id < b.query_id;
              });
    if (weight_log != nullptr) {
        for (const auto& outcome : outcomes) {
            weight_log->append(outcome.query_id, outcome.weights, outcome.intent, outcome.mode);
        }
    }

    EvalReport report;
    std::vector<std::optional<int>> all_ranks;
    std::map<std::string, std::vector<std::optional<int>>> category_ranks;
    for (const auto& outcome : outcomes) {
        all_ranks.push_back(outcome.rank);
        category_ranks[to_string(outcome.category)].push_back(outcome.rank);
    }
    report.overall = metrics_for(all_ranks);
    for (const auto& [category, ranks] : category_ranks) {
        report.per_category.emplace(category, metrics_for(ranks));
    }
    report.per_query = std::move(outcomes);
    report.ablation = to_string(config.ablation);
    report.truncation_depth = config.result_list_size;
    report.config_snapshot = {{"top_k_anchor", config.top_k_anchor},
                              {"lambda", config.lambda},
                              {"alpha", config.alpha},
                              {"causal_hops", config.causal_hops},
                              {"causal_decay", config.causal_decay},
                              {"result_list_size", config.result_list_size},
                              {"ablation", to_string(config.ablation)}};
    return report;
}

std::vector<QueryRecord> generate_queries(const KnowledgeBase& kb, int per_sop, QueryGenMode mode,
                                          const ChatClient* chat) {
    if (per_sop < 1) throw Error("per_sop must be >= 1");
    if (kb.empty()) throw Error("knowledge base is empty");

    std::vector<QueryRecord> records;
    if (mode == QueryGenMode::llm) {
        if (chat == nullptr) throw ConfigError("llm query generation requires a chat client");
        for (const auto& [sop_id, sop] : kb.sops) {
            std::string raw = chat->complete(
                prompts::kExaminer,
                "Write " + std::to_string(per_sop) + " distinct questions.\n\nProcedure title: "
                    + sop.title + "\n\n" + sop.body);
            json parsed = parse_llm_json(raw);
            std::vector<QueryRecord> sop_records;
            try {
                for (const auto& item : parsed.at("questions")) {
                    QueryRecord rec;
                    rec.query = text::strip_newlines(item.at("query").get<std::string>());
                    rec.category = query_category_from_string(item.value("category", "mixed"));
                    rec.gold_sop_id = sop_id;
                    sop_records.push_back(std::move(rec));
                    if (static_cast<int>(sop_records.size()) == per_sop) break;
                }
            } catch (const json::exception& e) {
                throw ParseError("examiner response missing fields (" + std::string(e.what())
                                 + "); raw response: " + raw);
            }
            if (sop_records.empty()) {
                throw ParseError("examiner returned no questions for " + sop_id
                                 + "; raw response: " + raw);
            }
            if (static_cast<int>(sop_records.size()) < per_sop) {
                text::warn("examiner returned " + std::to_string(sop_records.size()) + "/"
                           + std::to_string(per_sop) + " questions for " + sop_id);
            }
            for (std::size_t j = 0; j < sop_records.size(); ++j) {
                sop_records[j].query_id = sop_id + "::q" + std::to_string(j);
                records.push_back(std::move(sop_records[j]));
            }
        }
        return records;
    }

    // Template mode: deterministic, cycling categories per SOP. SOPs missing
    // the element a template needs fall back to the mixed template.
    const QueryCategory cycle[4] = {QueryCategory::entity, QueryCategory::causal,
                                    QueryCategory::flow, QueryCategory::mixed};
    for (const auto& [sop_id, sop] : kb.sops) {
        std::vector<const EntityNode*> entities = kb.entities_for(sop_id);

        std::string first_state;
        for (const auto& edge : kb.causal_graph.transitions) {
            if (edge.source_sop == sop_id) {
                first_state = kb.causal_graph.nodes.at(edge.from_key).label;
                break;
            }
        }
        if (first_state.empty()) {
            for (const auto& edge : kb.causal_graph.resolutions) {
                if (edge.sop_id == sop_id) {
                    first_state = kb.causal_graph.nodes.at(edge.state_key).label;
                    break;
                }
            }
        }

        std::string first_step;
        auto flow_it = kb.flow_graphs.find(sop_id);
        if (flow_it != kb.flow_graphs.end() && !flow_it->second.steps.empty()) {
            const FlowStep* lowest = &flow_it->second.steps.front();
            for (const auto& step : flow_it->second.steps) {
                if (step.id < lowest->id) lowest = &step;
            }
            first_step = lowest->text;
        }

        auto mixed_query = [&] {
            if (!entities.empty()) {
                return sop.title + " procedure for " + entities.front()->label;
            }
            return sop.title + " procedure";
        };

        for (int j = 0; j < per_sop; ++j) {
            QueryCategory wanted = cycle[j % 4];
            QueryRecord rec;
            rec.query_id = sop_id + "::q" + std::to_string(j);
            rec.gold_sop_id = sop_id;
            switch (wanted) {
                case QueryCategory::entity:
                    if (!entities.empty()) {
                        rec.query = "What should I do about " + entities.front()->label + "?";
                        rec.category = QueryCategory::entity;
                    }
                    break;
                case QueryCategory::causal:
                    if (!first_state.empty()) {
                        rec.query = "Why does " + first_state + " happen and what resolves it?";
                        rec.category = QueryCategory::causal;
                    }
                    break;
                case QueryCategory::flow:
                    if (!first_step.empty()) {
                        rec.query = "How do I " + text::to_lower(first_step) + "?";
                        rec.category = QueryCategory::flow;
                    }
                    break;
                case QueryCategory::mixed:
                    break;
            }
            if (rec.query.empty()) {
                rec.query = mixed_query();
                rec.category = QueryCategory::mixed;
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

QualityVerdict judge_sop_quality(const std::string& query, const std::string& answer,
                                 const std::string& gold_sop_body, const ChatClient* chat) {
    if (chat == nullptr) {
        throw Error("SOP quality judging requires an LLM backend; there is no offline mode");
    }
    std::string raw = chat->complete(
        std::string(prompts::kSopQualityJudge) + prompts::kJudgeResponseFormat,
        "Question: " + query + "\n\nGenerated answer:\n" + answer + "\n\nSource SOP:\n"
            + gold_sop_body);
    json parsed = parse_llm_json(raw);

    QualityVerdict verdict;
    try {
        verdict.has_step_by_step = parsed.at("has_step_by_step").get<int>();
        verdict.is_precise = parsed.at("is_precise").get<int>();
        verdict.is_concise = parsed.at("is_concise").get<int>();
        verdict.is_clear = parsed.at("is_clear").get<int>();
        verdict.score = parsed.at("score").get<double>();
        verdict.reasoning = parsed.value("reasoning", "");
    } catch (const json::exception& e) {
        throw ParseError("judge response missing fields (" + std::string(e.what())
                         + "); raw response: " + raw);
    }
    for (int flag : {verdict.has_step_by_step, verdict.is_precise, verdict.is_concise,
                     verdict.is_clear}) {
        if (flag != 0 && flag != 1) {
            throw ParseError("judge criteria must be 0 or 1; raw response: " + raw);
        }
    }
    double mean = (verdict.has_step_by_step + verdict.is_precise + verdict.is_concise
                   + verdict.is_clear)
                  / 4.0;
    if (std::abs(verdict.score - mean) > 1e-6) {
        text::warn("judge score " + std::to_string(verdict.score)
                   + " disagrees with criteria mean " + std::to_string(mean) + "; recomputed");
        verdict.score = mean;
        verdict.score_adjusted = true;
    } else {
        verdict.score = mean;
    }
    return verdict;
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read queries file " + path.string());
    std::vector<QueryRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            QueryRecord rec;
            rec.query_id = j.at("query_id").get<std::string>();
            rec.query = j.at("query").get<std::string>();
            rec.gold_sop_id = j.at("gold_sop_id").get<std::string>();
            rec.category = query_category_from_string(j.at("category").get<std::string>());
            records.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw ParseError("bad query record at " + path.string() + ":"
                             + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void save_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write queries file " + path.string());
    for (const auto& rec : queries) {
        json j = {{"query_id", rec.query_id},
                  {"query", rec.query},
                  {"gold_sop_id", rec.gold_sop_id},
                  {"category", to_string(rec.category)}};
        out << j.dump() << "\n";
    }
}

nlohmann::json to_json(const EvalReport& report) {
    json per_category = json::object();
    for (const auto& [category, block] : report.per_category) {
        per_category[category] = metric_block_to_json(block);
    }
    json per_query = json::array();
    for (const auto& outcome : report.per_query) {
        json row = {{"query_id", outcome.query_id},
                    {"gold_sop_id", outcome.gold_sop_id},
                    {"category", to_string(outcome.category)},
                    {"rank", outcome.rank.has_value() ? json(*outcome.rank) : json(nullptr)},
                    {"weights",
                     {{"entity", outcome.weights[0]},
                      {"causal", outcome.weights[1]},
                      {"flow", outcome.weights[2]}}},
                    {"intent", outcome.intent},
                    {"mode", outcome.mode}};
        per_query.push_back(std::move(row));
    }
    return {{"ablation", report.ablation},
            {"truncation_depth", report.truncation_depth},
            {"config", report.config_snapshot},
            {"metrics", metric_block_to_json(report.overall)},
            {"per_category", per_category},
            {"per_query", per_query}};
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report " + path.string());
    out << to_json(report).dump(2) << "\n";
}

} // namespace soprag
