#include "soprag/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "soprag/error.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kIndexVersion = 1;

struct MergeOutcome {
    std::string key;
    bool created = false;
};

/// Exact normalized-label lookup, creating the node if absent.
template <typename NodeMap, typename MakeNode>
MergeOutcome upsert_exact(NodeMap& nodes, const std::string& label, MakeNode make_node) {
    std::string key = text::normalize_label(label);
    auto it = nodes.find(key);
    if (it != nodes.end()) return {key, false};
    nodes.emplace(key, make_node(key));
    return {key, true};
}

/// Incremental-merge lookup: exact normalized label first, then the most
/// similar incumbent at or above the threshold (ties to the smallest key).
/// The incumbent keeps its label and embedding; the new label is recorded
/// as an alias.
template <typename NodeMap, typename MakeNode>
MergeOutcome upsert_similar(NodeMap& nodes, const std::string& label,
                            const SimilarityProvider& provider, double threshold,
                            MakeNode make_node) {
    std::string key = text::normalize_label(label);
    auto it = nodes.find(key);
    if (it != nodes.end()) return {key, false};

    EmbeddingVector emb = provider.embed(label);
    std::string best_key;
    double best_sim = -1.0;
    for (const auto& [node_key, node] : nodes) {
        double s = clamped_cosine(emb, node.embedding);
        if (s > best_sim) {
            best_sim = s;
            best_key = node_key;
        }
    }
    if (!best_key.empty() && best_sim >= threshold) {
        auto& node = nodes.at(best_key);
        if (label != node.label
            && std::find(node.aliases.begin(), node.aliases.end(), label) == node.aliases.end()) {
            node.aliases.push_back(label);
        }
        return {best_key, false};
    }
    nodes.emplace(key, make_node(key, std::move(emb)));
    return {key, true};
}

void add_sop_to_graphs(KnowledgeBase& kb, const AtomicSop& sop,
                       const ExtractionBackend& extraction, const SimilarityProvider& provider,
                       const Summarizer& summarizer, bool similarity_merge,
                       double merge_threshold) {
    kb.cards.emplace(sop.sop_id, make_procedure_card(sop, summarizer, provider));
    kb.sops.emplace(sop.sop_id, sop);

    auto resolve_entity = [&](const EntityRecord& rec) {
        if (similarity_merge) {
            return upsert_similar(kb.entity_graph.nodes, rec.label, provider, merge_threshold,
                                  [&](const std::string& key, EmbeddingVector emb) {
                                      return EntityNode{key, rec.label, rec.kind, std::move(emb), {}};
                                  });
        }
        return upsert_exact(kb.entity_graph.nodes, rec.label, [&](const std::string& key) {
            return EntityNode{key, rec.label, rec.kind, provider.embed(rec.label), {}};
        });
    };
    auto resolve_state = [&](const std::string& label) {
        if (similarity_merge) {
            return upsert_similar(kb.causal_graph.nodes, label, provider, merge_threshold,
                                  [&](const std::string& key, EmbeddingVector emb) {
                                      return StateNode{key, label, std::move(emb), {}};
                                  });
        }
        return upsert_exact(kb.causal_graph.nodes, label, [&](const std::string& key) {
            return StateNode{key, label, provider.embed(label), {}};
        });
    };

    for (const EntityRecord& rec : extraction.extract_entities(sop)) {
        std::string key = resolve_entity(rec).key;
        AssociationEdge edge{key, sop.sop_id};
        if (std::find(kb.entity_graph.edges.begin(), kb.entity_graph.edges.end(), edge)
            == kb.entity_graph.edges.end()) {
            kb.entity_graph.edges.push_back(edge);
        }
    }

    for (const CausalRelation& rel : extraction.extract_causals(sop)) {
        std::string from_key = resolve_state(rel.from_state).key;
        if (rel.resolves) {
            ResolutionEdge edge{from_key, sop.sop_id};
            if (std::find(kb.causal_graph.resolutions.begin(), kb.causal_graph.resolutions.end(),
                          edge)
                == kb.causal_graph.resolutions.end()) {
                kb.causal_graph.resolutions.push_back(edge);
            }
            continue;
        }
        std::string to_key = resolve_state(rel.to_state).key;
        if (from_key == to_key) {
            text::warn("dropping self-loop transition on '" + from_key + "' from " + sop.sop_id);
            continue;
        }
        kb.causal_graph.transitions.push_back(
            TransitionEdge{from_key, to_key, rel.relation, rel.condition, sop.sop_id});
    }

    FlowGraphSpec spec = extraction.extract_flow(sop);
    FlowGraph flow;
    flow.sop_id = sop.sop_id;
    for (const FlowStepSpec& step : spec.steps) {
        flow.steps.push_back(
            FlowStep{step.step_id, step.text, step.kind, provider.embed(step.text)});
    }
    for (const FlowEdgeSpec& edge : spec.edges) {
        flow.edges.push_back(FlowEdge{edge.from, edge.to, edge.branch_label});
    }
    kb.flow_graphs.emplace(sop.sop_id, std::move(flow));
}

json embedding_to_json(const EmbeddingVector& v) {
    return json(v.values);
}

EmbeddingVector embedding_from_json(const json& j) {
    return EmbeddingVector{j.get<std::vector<double>>()};
}

void write_lines(const fs::path& path, const std::vector<json>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& rec : records) out << rec.dump() << "\n";
}

std::vector<json> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<json> records;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw ParseError("bad record in " + path.string() + ": " + e.what());
        }
    }
    return records;
}

} // namespace

std::vector<const EntityNode*> KnowledgeBase::entities_for(const std::string& sop_id) const {
    std::vector<const EntityNode*> out;
    for (const auto& edge : entity_graph.edges) {
        if (edge.sop_id != sop_id) continue;
        auto it = entity_graph.nodes.find(edge.entity_key);
        if (it != entity_graph.nodes.end()) out.push_back(&it->second);
    }
    return out;
}

std::vector<std::string> KnowledgeBase::check_integrity() const {
    std::vector<std::string> problems;
    auto note = [&](std::string msg) { problems.push_back(std::move(msg)); };

    auto keys_of = [](const auto& m) {
        std::set<std::string> keys;
        for (const auto& [k, v] : m) keys.insert(k);
        return keys;
    };
    if (keys_of(cards) != keys_of(flow_graphs) || keys_of(cards) != keys_of(sops)) {
        note("key sets of cards, flow_graphs, and sops differ");
    }

    auto check_unit = [&](const EmbeddingVector& v, const std::string& what) {
        if (metadata.embedding_dim != 0 && v.dim() != metadata.embedding_dim) {
            note(what + " has dim " + std::to_string(v.dim()) + ", expected "
                 + std::to_string(metadata.embedding_dim));
        }
        if (std::abs(l2_norm(v) - 1.0) > 1e-6) note(what + " is not unit-norm");
    };

    for (const auto& [id, card] : cards) {
        if (card.abstract.find('\n') != std::string::npos) {
            note("card " + id + " abstract contains a newline");
        }
        check_unit(card.embedding, "card " + id);
    }
    for (const auto& [key, node] : entity_graph.nodes) check_unit(node.embedding, "entity " + key);
    for (const auto& [key, node] : causal_graph.nodes) check_unit(node.embedding, "state " + key);

    for (const auto& edge : entity_graph.edges) {
        if (entity_graph.nodes.find(edge.entity_key) == entity_graph.nodes.end()) {
            note("association edge references unknown entity '" + edge.entity_key + "'");
        }
        if (cards.find(edge.sop_id) == cards.end()) {
            note("association edge references unknown sop '" + edge.sop_id + "'");
        }
    }
    for (const auto& edge : causal_graph.transitions) {
        if (causal_graph.nodes.find(edge.from_key) == causal_graph.nodes.end()
            || causal_graph.nodes.find(edge.to_key) == causal_graph.nodes.end()) {
            note("transition references unknown state '" + edge.from_key + "' or '" + edge.to_key
                 + "'");
        }
        if (edge.from_key == edge.to_key) {
            note("self-loop transition on '" + edge.from_key + "'");
        }
    }
    for (const auto& edge : causal_graph.resolutions) {
        if (causal_graph.nodes.find(edge.state_key) == causal_graph.nodes.end()) {
            note("resolution edge references unknown state '" + edge.state_key + "'");
        }
        if (cards.find(edge.sop_id) == cards.end()) {
            note("resolution edge references unknown sop '" + edge.sop_id + "'");
        }
    }
    for (const auto& [sop_id, flow] : flow_graphs) {
        std::set<int> ids;
        for (const auto& step : flow.steps) {
            ids.insert(step.id);
            check_unit(step.embedding, "flow step in " + sop_id);
        }
        if (ids.size() != flow.steps.size()
            || (!ids.empty()
                && (*ids.begin() != 1 || *ids.rbegin() != static_cast<int>(ids.size())))) {
            note("flow of " + sop_id + " has non-dense step ids");
        }
        for (const auto& edge : flow.edges) {
            if (ids.count(edge.from) == 0 || ids.count(edge.to) == 0) {
                note("flow of " + sop_id + " has an edge to a nonexistent step");
            }
        }
    }
    return problems;
}

KnowledgeBase build_index(const std::vector<AtomicSop>& corpus,
                          const ExtractionBackend& extraction,
                          const SimilarityProvider& provider, const Summarizer& summarizer,
                          std::string config_json) {
    if (corpus.empty()) throw Error("cannot build an index from an empty corpus");
    {
        std::set<std::string> ids;
        for (const auto& sop : corpus) {
            if (!ids.insert(sop.sop_id).second) {
                throw Error("duplicate sop_id in corpus: " + sop.sop_id);
            }
        }
    }

    KnowledgeBase kb;
    kb.metadata.version = kIndexVersion;
    kb.metadata.embedding_mode = provider.mode();
    kb.metadata.extraction_mode = extraction.mode();
    kb.metadata.config_json = std::move(config_json);

    for (const auto& sop : corpus) {
        try {
            add_sop_to_graphs(kb, sop, extraction, provider, summarizer,
                              /*similarity_merge=*/false, 0.0);
        } catch (const Error& e) {
            throw Error("index build failed on " + sop.sop_id + ": " + e.what());
        }
    }
    kb.metadata.embedding_dim = provider.dim();
    return kb;
}

KnowledgeBase merge_incremental(const KnowledgeBase& kb, const AtomicSop& new_sop,
                                const ExtractionBackend& extraction,
                                const SimilarityProvider& provider, const Summarizer& summarizer,
                                double merge_threshold) {
    if (kb.cards.find(new_sop.sop_id) != kb.cards.end()) {
        throw Error("sop_id already indexed: " + new_sop.sop_id);
    }
    KnowledgeBase merged = kb;
    try {
        add_sop_to_graphs(merged, new_sop, extraction, provider, summarizer,
                          /*similarity_merge=*/true, merge_threshold);
    } catch (const Error& e) {
        throw Error("incremental merge failed on " + new_sop.sop_id + ": " + e.what());
    }
    if (merged.metadata.embedding_dim == 0) merged.metadata.embedding_dim = provider.dim();
    return merged;
}

void save(const KnowledgeBase& kb, const fs::path& dir) {
    fs::create_directories(dir);

    json manifest = {
        {"version", kb.metadata.version},
        {"embedding", {{"mode", kb.metadata.embedding_mode}, {"dim", kb.metadata.embedding_dim}}},
        {"extraction_mode", kb.metadata.extraction_mode},
        {"config_json", kb.metadata.config_json},
        {"counts",
         {{"cards", kb.cards.size()},
          {"entity_nodes", kb.entity_graph.nodes.size()},
          {"association_edges", kb.entity_graph.edges.size()},
          {"state_nodes", kb.causal_graph.nodes.size()},
          {"transitions", kb.causal_graph.transitions.size()},
          {"resolutions", kb.causal_graph.resolutions.size()}}},
    };
    {
        std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
        out << manifest.dump(2) << "\n";
    }

    std::vector<json> records;
    for (const auto& [id, card] : kb.cards) {
        records.push_back({{"sop_id", card.sop_id},
                           {"title", card.title},
                           {"abstract", card.abstract},
                           {"embedding", embedding_to_json(card.embedding)}});
    }
    write_lines(dir / "cards.jsonl", records);

    records.clear();
    for (const auto& [key, node] : kb.entity_graph.nodes) {
        records.push_back({{"record", "node"},
                           {"key", node.key},
                           {"label", node.label},
                           {"kind", to_string(node.kind)},
                           {"embedding", embedding_to_json(node.embedding)},
                           {"aliases", node.aliases}});
    }
    for (const auto& edge : kb.entity_graph.edges) {
        records.push_back(
            {{"record", "edge"}, {"entity_key", edge.entity_key}, {"sop_id", edge.sop_id}});
    }
    write_lines(dir / "entity_graph.jsonl", records);

    records.clear();
    for (const auto& [key, node] : kb.causal_graph.nodes) {
        records.push_back({{"record", "state"},
                           {"key", node.key},
                           {"label", node.label},
                           {"embedding", embedding_to_json(node.embedding)},
                           {"aliases", node.aliases}});
    }
    for (const auto& edge : kb.causal_graph.transitions) {
        records.push_back({{"record", "transition"},
                           {"from", edge.from_key},
                           {"to", edge.to_key},
                           {"relation", to_string(edge.relation)},
                           {"condition", edge.condition},
                           {"source_sop", edge.source_sop}});
    }
    for (const auto& edge : kb.causal_graph.resolutions) {
        records.push_back(
            {{"record", "resolution"}, {"state_key", edge.state_key}, {"sop_id", edge.sop_id}});
    }
    write_lines(dir / "causal_graph.jsonl", records);

    records.clear();
    for (const auto& [id, flow] : kb.flow_graphs) {
        json steps = json::array();
        for (const auto& step : flow.steps) {
            steps.push_back({{"id", step.id},
                             {"text", step.text},
                             {"kind", to_string(step.kind)},
                             {"embedding", embedding_to_json(step.embedding)}});
        }
        json edges = json::array();
        for (const auto& edge : flow.edges) {
            edges.push_back(
                {{"from", edge.from}, {"to", edge.to}, {"branch_label", edge.branch_label}});
        }
        records.push_back({{"sop_id", flow.sop_id}, {"steps", steps}, {"edges", edges}});
    }
    write_lines(dir / "flow_graphs.jsonl", records);

    records.clear();
    for (const auto& [id, sop] : kb.sops) {
        records.push_back({{"sop_id", sop.sop_id},
                           {"title", sop.title},
                           {"body", sop.body},
                           {"parent_doc", sop.parent_doc}});
    }
    write_lines(dir / "sops.jsonl", records);
}

KnowledgeBase load(const fs::path& dir, std::size_t expected_dim) {
    fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw Error("not an index directory (missing manifest.json): " + dir.string());
    }
    json manifest;
    {
        std::ifstream in(manifest_path, std::ios::binary);
        try {
            in >> manifest;
        } catch (const json::exception& e) {
            throw ParseError("bad manifest: " + std::string(e.what()));
        }
    }

    KnowledgeBase kb;
    try {
        kb.metadata.version = manifest.at("version").get<int>();
        kb.metadata.embedding_mode = manifest.at("embedding").at("mode").get<std::string>();
        kb.metadata.embedding_dim = manifest.at("embedding").at("dim").get<std::size_t>();
        kb.metadata.extraction_mode = manifest.at("extraction_mode").get<std::string>();
        kb.metadata.config_json = manifest.value("config_json", "");
    } catch (const json::exception& e) {
        throw ParseError("bad manifest: " + std::string(e.what()));
    }
    if (kb.metadata.version != kIndexVersion) {
        throw ConfigError("index version " + std::to_string(kb.metadata.version)
                          + " is not supported (expected " + std::to_string(kIndexVersion) + ")");
    }
    if (expected_dim != 0 && kb.metadata.embedding_dim != expected_dim) {
        throw ConfigError("index embedding dim " + std::to_string(kb.metadata.embedding_dim)
                          + " does not match configured dim " + std::to_string(expected_dim));
    }

    try {
        for (const auto& rec : read_lines(dir / "cards.jsonl")) {
            ProcedureCard card;
            card.sop_id = rec.at("sop_id").get<std::string>();
            card.title = rec.at("title").get<std::string>();
            card.abstract = rec.at("abstract").get<std::string>();
            card.embedding = embedding_from_json(rec.at("embedding"));
            kb.cards.emplace(card.sop_id, std::move(card));
        }
        for (const auto& rec : read_lines(dir / "entity_graph.jsonl")) {
            if (rec.at("record") == "node") {
                EntityNode node;
                node.key = rec.at("key").get<std::string>();
                node.label = rec.at("label").get<std::string>();
                node.kind =
                    entity_kind_from_string(rec.at("kind").get<std::string>()).value_or(EntityKind::other);
                node.embedding = embedding_from_json(rec.at("embedding"));
                node.aliases = rec.at("aliases").get<std::vector<std::string>>();
                kb.entity_graph.nodes.emplace(node.key, std::move(node));
            } else {
                kb.entity_graph.edges.push_back(AssociationEdge{
                    rec.at("entity_key").get<std::string>(), rec.at("sop_id").get<std::string>()});
            }
        }
        for (const auto& rec : read_lines(dir / "causal_graph.jsonl")) {
            std::string kind = rec.at("record").get<std::string>();
            if (kind == "state") {
                StateNode node;
                node.key = rec.at("key").get<std::string>();
                node.label = rec.at("label").get<std::string>();
                node.embedding = embedding_from_json(rec.at("embedding"));
                node.aliases = rec.at("aliases").get<std::vector<std::string>>();
                kb.causal_graph.nodes.emplace(node.key, std::move(node));
            } else if (kind == "transition") {
                kb.causal_graph.transitions.push_back(TransitionEdge{
                    rec.at("from").get<std::string>(), rec.at("to").get<std::string>(),
                    causal_kind_from_string(rec.at("relation").get<std::string>())
                        .value_or(CausalKind::causes),
                    rec.at("condition").get<std::string>(),
                    rec.at("source_sop").get<std::string>()});
            } else {
                kb.causal_graph.resolutions.push_back(ResolutionEdge{
                    rec.at("state_key").get<std::string>(), rec.at("sop_id").get<std::string>()});
            }
        }
        for (const auto& rec : read_lines(dir / "flow_graphs.jsonl")) {
            FlowGraph flow;
            flow.sop_id = rec.at("sop_id").get<std::string>();
            for (const auto& s : rec.at("steps")) {
                FlowStep step;
                step.id = s.at("id").get<int>();
                step.text = s.at("text").get<std::string>();
                step.kind = s.at("kind").get<std::string>() == "decision" ? StepKind::decision
                                                                          : StepKind::action;
                step.embedding = embedding_from_json(s.at("embedding"));
                flow.steps.push_back(std::move(step));
            }
            for (const auto& e : rec.at("edges")) {
                flow.edges.push_back(FlowEdge{e.at("from").get<int>(), e.at("to").get<int>(),
                                              e.at("branch_label").get<std::string>()});
            }
            kb.flow_graphs.emplace(flow.sop_id, std::move(flow));
        }
        for (const auto& rec : read_lines(dir / "sops.jsonl")) {
            AtomicSop sop;
            sop.sop_id = rec.at("sop_id").get<std::string>();
            sop.title = rec.at("title").get<std::string>();
            sop.body = rec.at("body").get<std::string>();
            sop.parent_doc = rec.at("parent_doc").get<std::string>();
            kb.sops.emplace(sop.sop_id, std::move(sop));
        }
    } catch (const json::exception& e) {
        throw ParseError("bad index record: " + std::string(e.what()));
    }

    std::vector<std::string> problems = kb.check_integrity();
    if (!problems.empty()) {
        throw ParseError("index failed integrity check: " + problems.front() + " (and "
                         + std::to_string(problems.size() - 1) + " more)");
    }
    return kb;
}

} // namespace soprag
