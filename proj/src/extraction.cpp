#include "soprag/extraction.hpp"

#include <regex>
#include <set>
#include <unordered_set>

#include "soprag/error.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/prompts.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace {

using nlohmann::json;

std::vector<std::string> section_lines(const std::string& body, const std::string& name) {
    std::vector<std::string> out;
    bool inside = false;
    for (const auto& line : text::split_lines(body)) {
        std::string t = text::trim(line);
        if (t.starts_with("#")) {
            std::size_t hashes = t.find_first_not_of('#');
            if (hashes == std::string::npos) hashes = t.size();
            std::string heading = text::to_lower(text::trim(t.substr(hashes)));
            inside = (hashes == 2 && heading == name);
            continue;
        }
        if (inside && !t.empty()) out.push_back(t);
    }
    return out;
}

/// Shared post-validation: drop trivial labels (single chars, bare numbers)
/// and deduplicate by normalized label, keeping the first occurrence.
std::vector<EntityRecord> filter_entities(std::vector<EntityRecord> records) {
    std::vector<EntityRecord> out;
    std::unordered_set<std::string> seen;
    for (auto& rec : records) {
        rec.label = text::trim(rec.label);
        if (rec.label.empty()) continue;
        if (text::is_trivial_label(rec.label)) {
            text::warn("dropping trivial entity label '" + rec.label + "' in " + rec.source_sop);
            continue;
        }
        if (seen.insert(text::normalize_label(rec.label)).second) {
            out.push_back(std::move(rec));
        }
    }
    return out;
}

void validate_flow(const FlowGraphSpec& spec) {
    std::set<int> ids;
    for (const auto& step : spec.steps) ids.insert(step.step_id);
    if (ids.size() != spec.steps.size()) {
        throw ParseError("duplicate step ids in flow of " + spec.source_sop);
    }
    if (!spec.steps.empty() && (*ids.begin() != 1 || *ids.rbegin() != static_cast<int>(ids.size()))) {
        throw ParseError("step ids must be dense from 1 in flow of " + spec.source_sop);
    }
    for (const auto& edge : spec.edges) {
        if (ids.count(edge.from) == 0 || ids.count(edge.to) == 0) {
            throw ParseError("flow edge " + std::to_string(edge.from) + " -> "
                             + std::to_string(edge.to) + " references a nonexistent step in "
                             + spec.source_sop);
        }
    }
}

const std::regex kDecisionRe(R"(^IF\s+(.+?)\s*:\s*goto\s+(\d+)\s+ELSE\s*:\s*goto\s+(\d+)\s*$)",
                             std::regex::icase);
const std::regex kStepRe(R"(^(\d+)\.\s+(.*)$)");

} // namespace

std::string to_string(EntityKind kind) {
    switch (kind) {
        case EntityKind::alarm: return "alarm";
        case EntityKind::parameter: return "parameter";
        case EntityKind::asset: return "asset";
        case EntityKind::role: return "role";
        case EntityKind::other: return "other";
    }
    return "other";
}

std::optional<EntityKind> entity_kind_from_string(const std::string& s) {
    std::string k = text::to_lower(text::trim(s));
    if (k == "alarm") return EntityKind::alarm;
    if (k == "parameter") return EntityKind::parameter;
    if (k == "asset") return EntityKind::asset;
    if (k == "role") return EntityKind::role;
    if (k == "other") return EntityKind::other;
    return std::nullopt;
}

std::string to_string(CausalKind kind) {
    switch (kind) {
        case CausalKind::causes: return "causes";
        case CausalKind::prevents: return "prevents";
        case CausalKind::enables: return "enables";
        case CausalKind::mitigates: return "mitigates";
    }
    return "causes";
}

std::optional<CausalKind> causal_kind_from_string(const std::string& s) {
    std::string k = text::to_lower(text::trim(s));
    if (k == "causes") return CausalKind::causes;
    if (k == "prevents") return CausalKind::prevents;
    if (k == "enables") return CausalKind::enables;
    if (k == "mitigates") return CausalKind::mitigates;
    return std::nullopt;
}

std::string to_string(StepKind kind) {
    return kind == StepKind::action ? "action" : "decision";
}

// ---------------------------------------------------------------------------
// Rules mode: canonical schema parser
// ---------------------------------------------------------------------------

std::vector<EntityRecord> RulesExtractionBackend::extract_entities(const AtomicSop& sop) const {
    std::vector<EntityRecord> records;
    for (const auto& line : section_lines(sop.body, "entities")) {
        if (!line.starts_with("-")) continue;
        std::string item = text::trim(line.substr(1));
        std::size_t open = item.rfind('(');
        if (open == std::string::npos || item.back() != ')') {
            text::warn("malformed entity line '" + line + "' in " + sop.sop_id);
            continue;
        }
        std::string label = text::trim(item.substr(0, open));
        auto kind = entity_kind_from_string(item.substr(open + 1, item.size() - open - 2));
        if (label.empty() || !kind) {
            text::warn("malformed entity line '" + line + "' in " + sop.sop_id);
            continue;
        }
        records.push_back(EntityRecord{label, *kind, sop.sop_id});
    }
    return filter_entities(std::move(records));
}

std::vector<CausalRelation> RulesExtractionBackend::extract_causals(const AtomicSop& sop) const {
    std::vector<CausalRelation> relations;
    for (const auto& line : section_lines(sop.body, "causes")) {
        if (!line.starts_with("-")) continue;
        std::string item = text::trim(line.substr(1));

        std::size_t resolve_pos = item.find("=>");
        if (resolve_pos != std::string::npos) {
            std::string from = text::trim(item.substr(0, resolve_pos));
            std::string rhs = text::trim(item.substr(resolve_pos + 2));
            if (from.empty() || rhs != "RESOLVE") {
                text::warn("malformed resolution line '" + line + "' in " + sop.sop_id);
                continue;
            }
            CausalRelation rel;
            rel.from_state = from;
            rel.resolves = true;
            rel.source_sop = sop.sop_id;
            relations.push_back(std::move(rel));
            continue;
        }

        std::size_t arrow = item.find("->");
        if (arrow == std::string::npos) {
            text::warn("malformed causal line '" + line + "' in " + sop.sop_id);
            continue;
        }
        std::string from = text::trim(item.substr(0, arrow));
        std::string rest = text::trim(item.substr(arrow + 2));
        std::string condition;
        if (rest.ends_with("]")) {
            std::size_t open = rest.rfind('[');
            if (open != std::string::npos) {
                condition = text::trim(rest.substr(open + 1, rest.size() - open - 2));
                rest = text::trim(rest.substr(0, open));
            }
        }
        if (from.empty() || rest.empty()) {
            text::warn("malformed causal line '" + line + "' in " + sop.sop_id);
            continue;
        }
        CausalRelation rel;
        rel.from_state = from;
        rel.to_state = rest;
        rel.relation = CausalKind::causes;
        rel.condition = condition;
        rel.source_sop = sop.sop_id;
        relations.push_back(std::move(rel));
    }
    return relations;
}

FlowGraphSpec RulesExtractionBackend::extract_flow(const AtomicSop& sop) const {
    FlowGraphSpec spec;
    spec.source_sop = sop.sop_id;

    struct Decision {
        int from;
        int yes_to;
        int no_to;
    };
    std::vector<Decision> decisions;
    for (const auto& line : section_lines(sop.body, "steps")) {
        std::smatch m;
        if (!std::regex_match(line, m, kStepRe)) continue;
        int id = std::stoi(m[1].str());
        std::string body = text::trim(m[2].str());

        std::smatch dm;
        if (std::regex_match(body, dm, kDecisionRe)) {
            spec.steps.push_back(FlowStepSpec{id, text::trim(dm[1].str()), StepKind::decision});
            decisions.push_back(Decision{id, std::stoi(dm[2].str()), std::stoi(dm[3].str())});
        } else {
            spec.steps.push_back(FlowStepSpec{id, body, StepKind::action});
        }
    }

    int n = static_cast<int>(spec.steps.size());
    for (int i = 0; i < n; ++i) {
        if (spec.steps[i].step_id != i + 1) {
            throw ParseError("steps must be numbered densely from 1 in " + sop.sop_id);
        }
    }
    for (const auto& d : decisions) {
        if (d.yes_to < 1 || d.yes_to > n || d.no_to < 1 || d.no_to > n) {
            int bad = (d.yes_to < 1 || d.yes_to > n) ? d.yes_to : d.no_to;
            throw ParseError("goto target " + std::to_string(bad) + " out of range in step "
                             + std::to_string(d.from) + " of " + sop.sop_id);
        }
    }

    // Action steps chain sequentially; decision steps emit only their branches.
    std::size_t next_decision = 0;
    for (const auto& step : spec.steps) {
        if (step.kind == StepKind::action) {
            if (step.step_id < n) {
                spec.edges.push_back(FlowEdgeSpec{step.step_id, step.step_id + 1, ""});
            }
        } else {
            const Decision& d = decisions.at(next_decision++);
            spec.edges.push_back(FlowEdgeSpec{d.from, d.yes_to, "yes"});
            spec.edges.push_back(FlowEdgeSpec{d.from, d.no_to, "no"});
        }
    }

    validate_flow(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// LLM mode: chat-backed extraction against the construction prompts
// ---------------------------------------------------------------------------

namespace {

std::string sop_prompt_body(const AtomicSop& sop) {
    return "SOP title: " + sop.title + "\n\nSOP document:\n" + sop.body;
}

} // namespace

std::vector<EntityRecord> LlmExtractionBackend::extract_entities(const AtomicSop& sop) const {
    std::string raw = chat_.complete(std::string(prompts::kEntityExtraction)
                                         + prompts::kEntityResponseFormat,
                                     sop_prompt_body(sop));
    json parsed = parse_llm_json(raw);
    std::vector<EntityRecord> records;
    try {
        for (const auto& item : parsed.at("entities")) {
            EntityRecord rec;
            rec.label = item.at("label").get<std::string>();
            auto kind = entity_kind_from_string(item.value("kind", "other"));
            rec.kind = kind.value_or(EntityKind::other);
            rec.source_sop = sop.sop_id;
            records.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ParseError("entity response missing fields (" + std::string(e.what())
                         + "); raw response: " + raw);
    }
    return filter_entities(std::move(records));
}

std::vector<CausalRelation> LlmExtractionBackend::extract_causals(const AtomicSop& sop) const {
    std::string raw = chat_.complete(std::string(prompts::kCausalExtraction)
                                         + prompts::kCausalResponseFormat,
                                     sop_prompt_body(sop));
    json parsed = parse_llm_json(raw);
    std::vector<CausalRelation> relations;
    try {
        for (const auto& item : parsed.at("causal_relations")) {
            CausalRelation rel;
            rel.from_state = text::trim(item.at("from_state").get<std::string>());
            rel.resolves = item.value("resolves", false);
            if (!rel.resolves) {
                rel.to_state = text::trim(item.at("to_state").get<std::string>());
            }
            auto kind = causal_kind_from_string(item.value("relation", "causes"));
            rel.relation = kind.value_or(CausalKind::causes);
            if (item.contains("condition") && !item.at("condition").is_null()) {
                rel.condition = text::trim(item.at("condition").get<std::string>());
            }
            rel.source_sop = sop.sop_id;
            if (rel.from_state.empty() || (!rel.resolves && rel.to_state.empty())) {
                text::warn("dropping incomplete causal relation in " + sop.sop_id);
                continue;
            }
            relations.push_back(std::move(rel));
        }
    } catch (const json::exception& e) {
        throw ParseError("causal response missing fields (" + std::string(e.what())
                         + "); raw response: " + raw);
    }
    return relations;
}

FlowGraphSpec LlmExtractionBackend::extract_flow(const AtomicSop& sop) const {
    std::string raw = chat_.complete(std::string(prompts::kFlowExtraction)
                                         + prompts::kFlowResponseFormat,
                                     sop_prompt_body(sop));
    json parsed = parse_llm_json(raw);
    FlowGraphSpec spec;
    spec.source_sop = sop.sop_id;
    try {
        for (const auto& item : parsed.at("steps")) {
            FlowStepSpec step;
            step.step_id = item.at("step_id").get<int>();
            step.text = text::trim(item.at("text").get<std::string>());
            step.kind = text::to_lower(item.value("kind", "action")) == "decision"
                            ? StepKind::decision
                            : StepKind::action;
            spec.steps.push_back(std::move(step));
        }
        for (const auto& item : parsed.value("edges", json::array())) {
            FlowEdgeSpec edge;
            edge.from = item.at("from").get<int>();
            edge.to = item.at("to").get<int>();
            if (item.contains("branch_label") && !item.at("branch_label").is_null()) {
                edge.branch_label = item.at("branch_label").get<std::string>();
            }
            spec.edges.push_back(std::move(edge));
        }
    } catch (const json::exception& e) {
        throw ParseError("flow response missing fields (" + std::string(e.what())
                         + "); raw response: " + raw);
    }
    validate_flow(spec);
    return spec;
}

} // namespace soprag
