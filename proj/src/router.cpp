#include "soprag/router.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "soprag/error.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/prompts.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace {

const std::vector<std::string> kCausalCues = {"why",     "cause",    "caused",
                                              "root cause", "diagnose", "reason"};
const std::vector<std::string> kFlowCues = {"how",     "step",    "steps",   "procedure",
                                            "perform", "execute", "recover", "process"};

/// Equipment-code shape: at least two letters, an optional separator, digits.
bool looks_like_code(const std::string& token) {
    std::size_t i = 0;
    while (i < token.size() && std::isalpha(static_cast<unsigned char>(token[i])) != 0) ++i;
    if (i < 2) return false;
    if (i < token.size() && (token[i] == '-' || token[i] == '_' || token[i] == '/')) ++i;
    if (i >= token.size()) return false;
    for (std::size_t j = i; j < token.size(); ++j) {
        if (std::isdigit(static_cast<unsigned char>(token[j])) == 0) return false;
    }
    return true;
}

/// Occurrences of a cue in the token stream; multi-word cues match
/// consecutive tokens. Each cue is counted independently.
int count_cue(const std::vector<std::string>& lower_tokens, const std::string& cue) {
    std::vector<std::string> parts = text::tokenize(cue);
    if (parts.empty() || lower_tokens.size() < parts.size()) return 0;
    int count = 0;
    for (std::size_t i = 0; i + parts.size() <= lower_tokens.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < parts.size(); ++j) {
            if (lower_tokens[i + j] != parts[j]) {
                match = false;
                break;
            }
        }
        if (match) ++count;
    }
    return count;
}

std::string dominant_focus(const std::array<double, 3>& w) {
    if (w[0] == w[1] && w[1] == w[2]) return "general";
    if (w[0] >= w[1] && w[0] >= w[2]) return "entity-focused";
    if (w[1] >= w[0] && w[1] >= w[2]) return "causal-focused";
    return "flow-focused";
}

} // namespace

std::string to_string(RouterMode mode) {
    return mode == RouterMode::heuristic ? "heuristic" : "llm";
}

std::array<double, 3> normalize_weights(const std::array<double, 3>& raw) {
    double sum = 0.0;
    for (double w : raw) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error("router weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (sum == 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return {raw[0] / sum, raw[1] / sum, raw[2] / sum};
}

RoutingDecision heuristic_route(const std::string& query, const KnowledgeBase& kb) {
    if (text::trim(query).empty()) throw Error("cannot route an empty query");

    std::vector<std::string> tokens = text::tokenize(query);
    std::vector<std::string> lower_tokens;
    lower_tokens.reserve(tokens.size());
    for (const auto& t : tokens) lower_tokens.push_back(text::to_lower(t));

    int causal = 0;
    for (const auto& cue : kCausalCues) causal += count_cue(lower_tokens, cue);
    int flow = 0;
    for (const auto& cue : kFlowCues) flow += count_cue(lower_tokens, cue);

    int entity = 0;
    std::vector<std::string> query_entities;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        bool is_entity = looks_like_code(tokens[i])
                         || kb.entity_graph.nodes.count(text::normalize_label(tokens[i])) > 0;
        if (!is_entity) continue;
        ++entity;
        if (seen.insert(text::normalize_label(tokens[i])).second) {
            query_entities.push_back(tokens[i]);
        }
    }

    RoutingDecision decision;
    decision.raw_weights = {static_cast<double>(entity), static_cast<double>(causal),
                            static_cast<double>(flow)};
    decision.weights = normalize_weights(decision.raw_weights);
    decision.query_entities = std::move(query_entities);
    decision.intent = dominant_focus(decision.weights);
    decision.mode_used = RouterMode::heuristic;
    return decision;
}

Router::Router(RouterMode mode, const ChatClient* chat) : mode_(mode), chat_(chat) {
    if (mode_ == RouterMode::llm && chat_ == nullptr) {
        throw ConfigError("llm router mode requires a chat client");
    }
}

RoutingDecision Router::llm_route(const std::string& query, const KnowledgeBase& kb) const {
    std::string raw = chat_->complete(std::string(prompts::kRouter) + prompts::kRouterResponseFormat,
                                      query);
    nlohmann::json parsed = parse_llm_json(raw);
    RoutingDecision decision;
    try {
        decision.intent = text::strip_newlines(parsed.at("intent").get<std::string>());
        for (const auto& e : parsed.value("entities", nlohmann::json::array())) {
            decision.query_entities.push_back(e.get<std::string>());
        }
        const auto& w = parsed.at("weights");
        decision.raw_weights = {w.at("entity").get<double>(), w.at("causal").get<double>(),
                                w.at("flow").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("router response missing fields (" + std::string(e.what())
                         + "); raw response: " + raw);
    }
    decision.weights = normalize_weights(decision.raw_weights);
    decision.mode_used = RouterMode::llm;
    (void)kb;
    return decision;
}

RoutingDecision Router::route(const std::string& query, const KnowledgeBase& kb) const {
    if (text::trim(query).empty()) throw Error("cannot route an empty query");
    if (mode_ == RouterMode::llm) {
        try {
            return llm_route(query, kb);
        } catch (const std::exception& e) {
            text::warn(std::string("llm router failed (") + e.what()
                       + "); falling back to heuristic");
        }
    }
    return heuristic_route(query, kb);
}

WeightLog::WeightLog(std::filesystem::path path) : path_(std::move(path)) {
    std::lock_guard lock(mutex_);
    if (!std::filesystem::exists(path_)) {
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write weight log " + path_.string());
        out << "query_id,w_entity,w_causal,w_flow,intent,mode\n";
    }
}

void WeightLog::append(const std::string& query_id, const std::array<double, 3>& weights,
                       const std::string& intent, const std::string& mode) {
    auto csv_field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += "\"\"";
            else quoted.push_back(c);
        }
        quoted += "\"";
        return quoted;
    };
    char buffer[64];
    std::string row = csv_field(query_id);
    for (double w : weights) {
        std::snprintf(buffer, sizeof(buffer), "%.6f", w);
        row += ",";
        row += buffer;
    }
    row += "," + csv_field(intent) + "," + csv_field(mode) + "\n";

    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to weight log " + path_.string());
    out << row;
}

} // namespace soprag
