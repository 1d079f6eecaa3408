#pragma once

#include <optional>
#include <string>
#include <vector>

#include "soprag/corpus.hpp"

namespace soprag {

class ChatClient;

enum class EntityKind { alarm, parameter, asset, role, other };

std::string to_string(EntityKind kind);
std::optional<EntityKind> entity_kind_from_string(const std::string& s);

struct EntityRecord {
    std::string label;
    EntityKind kind = EntityKind::other;
    std::string source_sop;

    bool operator==(const EntityRecord&) const = default;
};

enum class CausalKind { causes, prevents, enables, mitigates };

std::string to_string(CausalKind kind);
std::optional<CausalKind> causal_kind_from_string(const std::string& s);

struct CausalRelation {
    std::string from_state;
    std::string to_state; // empty when resolves is set
    CausalKind relation = CausalKind::causes;
    std::string condition; // empty = unconditional
    bool resolves = false; // state -> this SOP resolution edge
    std::string source_sop;

    bool operator==(const CausalRelation&) const = default;
};

enum class StepKind { action, decision };

std::string to_string(StepKind kind);

struct FlowStepSpec {
    int step_id = 0;
    std::string text;
    StepKind kind = StepKind::action;

    bool operator==(const FlowStepSpec&) const = default;
};

struct FlowEdgeSpec {
    int from = 0;
    int to = 0;
    std::string branch_label; // "yes"/"no" on decision branches, empty otherwise

    bool operator==(const FlowEdgeSpec&) const = default;
};

struct FlowGraphSpec {
    std::vector<FlowStepSpec> steps; // ids unique and dense from 1
    std::vector<FlowEdgeSpec> edges;
    std::string source_sop;

    bool operator==(const FlowGraphSpec&) const = default;
};

/// Produces the raw material for the three graph experts, either by parsing
/// the canonical SOP schema (rules mode, deterministic) or through an LLM
/// (llm mode). Both modes share the same post-validation: entity labels
/// deduplicated and filtered, flow edges checked against the step set.
class ExtractionBackend {
public:
    virtual ~ExtractionBackend() = default;
    virtual std::string mode() const = 0;
    virtual std::vector<EntityRecord> extract_entities(const AtomicSop& sop) const = 0;
    virtual std::vector<CausalRelation> extract_causals(const AtomicSop& sop) const = 0;
    virtual FlowGraphSpec extract_flow(const AtomicSop& sop) const = 0;
};

/// Deterministic parser over the canonical schema sections
/// ("## Entities", "## Causes", "## Steps"); all sections optional.
class RulesExtractionBackend final : public ExtractionBackend {
public:
    std::string mode() const override { return "rules"; }
    std::vector<EntityRecord> extract_entities(const AtomicSop& sop) const override;
    std::vector<CausalRelation> extract_causals(const AtomicSop& sop) const override;
    FlowGraphSpec extract_flow(const AtomicSop& sop) const override;
};

class LlmExtractionBackend final : public ExtractionBackend {
public:
    explicit LlmExtractionBackend(const ChatClient& chat) : chat_(chat) {}

    std::string mode() const override { return "llm"; }
    std::vector<EntityRecord> extract_entities(const AtomicSop& sop) const override;
    std::vector<CausalRelation> extract_causals(const AtomicSop& sop) const override;
    FlowGraphSpec extract_flow(const AtomicSop& sop) const override;

private:
    const ChatClient& chat_;
};

} // namespace soprag
