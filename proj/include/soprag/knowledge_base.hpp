#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "soprag/corpus.hpp"
#include "soprag/extraction.hpp"
#include "soprag/similarity.hpp"

namespace soprag {

struct EntityNode {
    std::string key;   // normalized label
    std::string label; // incumbent display label
    EntityKind kind = EntityKind::other;
    EmbeddingVector embedding;
    std::vector<std::string> aliases; // labels absorbed by similarity merges

    bool operator==(const EntityNode&) const = default;
};

struct AssociationEdge {
    std::string entity_key;
    std::string sop_id; // relation is fixed to "associated_with"

    bool operator==(const AssociationEdge&) const = default;
};

struct EntityGraph {
    std::map<std::string, EntityNode> nodes;
    std::vector<AssociationEdge> edges;

    bool operator==(const EntityGraph&) const = default;
};

struct StateNode {
    std::string key;
    std::string label;
    EmbeddingVector embedding;
    std::vector<std::string> aliases;

    bool operator==(const StateNode&) const = default;
};

struct TransitionEdge {
    std::string from_key;
    std::string to_key;
    CausalKind relation = CausalKind::causes;
    std::string condition;
    std::string source_sop;

    bool operator==(const TransitionEdge&) const = default;
};

struct ResolutionEdge {
    std::string state_key;
    std::string sop_id;

    bool operator==(const ResolutionEdge&) const = default;
};

struct CausalGraph {
    std::map<std::string, StateNode> nodes;
    std::vector<TransitionEdge> transitions;
    std::vector<ResolutionEdge> resolutions;

    bool operator==(const CausalGraph&) const = default;
};

struct FlowStep {
    int id = 0;
    std::string text;
    StepKind kind = StepKind::action;
    EmbeddingVector embedding;

    bool operator==(const FlowStep&) const = default;
};

struct FlowEdge {
    int from = 0;
    int to = 0;
    std::string branch_label;

    bool operator==(const FlowEdge&) const = default;
};

/// Per-SOP step graph; stored standalone, never merged across SOPs.
struct FlowGraph {
    std::string sop_id;
    std::vector<FlowStep> steps;
    std::vector<FlowEdge> edges;

    bool operator==(const FlowGraph&) const = default;
};

struct BuildMetadata {
    int version = 1;
    std::string embedding_mode;
    std::size_t embedding_dim = 0;
    std::string extraction_mode;
    std::string config_json; // opaque config snapshot from the builder

    bool operator==(const BuildMetadata&) const = default;
};

class KnowledgeBase {
public:
    std::map<std::string, ProcedureCard> cards;
    EntityGraph entity_graph;
    CausalGraph causal_graph;
    std::map<std::string, FlowGraph> flow_graphs;
    std::map<std::string, AtomicSop> sops;
    BuildMetadata metadata;

    bool empty() const { return cards.empty(); }
    std::size_t size() const { return cards.size(); }

    /// Entity nodes linked to the SOP by association edges, in edge order.
    std::vector<const EntityNode*> entities_for(const std::string& sop_id) const;

    /// Referential-integrity sweep; returns human-readable violations
    /// (empty means the graph is consistent).
    std::vector<std::string> check_integrity() const;

    bool operator==(const KnowledgeBase&) const = default;
};

/// Build everything from scratch: one card per SOP, entity/state nodes merged
/// by exact normalized label within the build, one flow graph per SOP.
/// Any extraction failure aborts the build with the sop_id in context.
KnowledgeBase build_index(const std::vector<AtomicSop>& corpus,
                          const ExtractionBackend& extraction,
                          const SimilarityProvider& provider,
                          const Summarizer& summarizer,
                          std::string config_json = "");

/// Add one SOP to an existing index. The new flow graph is stored standalone;
/// new entity/state nodes merge into incumbents when normalized labels match
/// or embedding similarity reaches merge_threshold, keeping the incumbent
/// label and embedding and recording the alias.
KnowledgeBase merge_incremental(const KnowledgeBase& kb, const AtomicSop& new_sop,
                                const ExtractionBackend& extraction,
                                const SimilarityProvider& provider,
                                const Summarizer& summarizer,
                                double merge_threshold = 0.9);

/// Persist as JSON-lines files plus a versioned manifest. Floats keep full
/// round-trip precision; load(save(kb)) compares equal field-by-field.
void save(const KnowledgeBase& kb, const std::filesystem::path& dir);

/// expected_dim = 0 accepts whatever the index was built with; a nonzero
/// mismatch is a ConfigError.
KnowledgeBase load(const std::filesystem::path& dir, std::size_t expected_dim = 0);

} // namespace soprag
