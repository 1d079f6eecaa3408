#pragma once

// Shared test fixtures: a deterministic synthetic SOP corpus in the canonical
// schema, random generators for property tests, and controllable fakes for
// the chat and similarity contracts.

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "soprag/corpus.hpp"
#include "soprag/knowledge_base.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/similarity.hpp"

namespace fixtures {

/// Distinct title/entity/state/step text per index; canonical schema body.
soprag::AtomicSop canonical_sop(int i);
std::vector<soprag::AtomicSop> canonical_corpus(int n);

/// The unique pieces used to assemble canonical_sop(i), for hand-built
/// expectations.
struct SopPieces {
    std::string code;
    std::string state;
    std::string first_step;
    std::string title;
};
SopPieces canonical_pieces(int i);

/// Random markdown-ish document: prose lines mixed with level-1 headings.
std::string random_document(std::mt19937& rng);

/// Random acyclic flow graph: forward-only edges, a mix of action and
/// decision steps. Embeddings are left empty (linearization ignores them).
soprag::FlowGraph random_acyclic_flow(std::mt19937& rng);

/// Random short query-ish text.
std::string random_text(std::mt19937& rng);

/// Scripted chat client: replies in order, then throws; or always throws.
class FakeChatClient final : public soprag::ChatClient {
public:
    explicit FakeChatClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    static FakeChatClient failing() { return FakeChatClient({}); }

    std::string complete(const std::string& system_prompt,
                         const std::string& user_prompt) const override;

    const std::vector<std::pair<std::string, std::string>>& calls() const { return calls_; }

private:
    std::vector<std::string> replies_;
    mutable std::size_t next_ = 0;
    mutable std::vector<std::pair<std::string, std::string>> calls_;
};

/// Similarity provider with hand-assigned unit vectors per exact string;
/// unknown strings get a deterministic fallback axis.
class FixedSimProvider final : public soprag::SimilarityProvider {
public:
    explicit FixedSimProvider(std::size_t dim) : dim_(dim) {}

    void set(const std::string& text, std::vector<double> values);

    std::string mode() const override { return "hash"; }
    std::size_t dim() const override { return dim_; }
    soprag::EmbeddingVector embed(const std::string& text) const override;

private:
    std::size_t dim_;
    std::map<std::string, std::vector<double>> vectors_;
};

} // namespace fixtures
