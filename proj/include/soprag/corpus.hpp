#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "soprag/similarity.hpp"

namespace soprag {

class ChatClient;

struct SopDocument {
    std::string doc_id;      // relative path within the corpus directory
    std::string source_path; // absolute path it was read from
    std::string body;        // raw markdown
};

/// A single executable procedure — the unit of retrieval. One document
/// may contain several.
struct AtomicSop {
    std::string sop_id; // "<doc_id>#<ordinal starting at 0>"
    std::string title;
    std::string body; // markdown slice, including the heading line
    std::string parent_doc;

    bool operator==(const AtomicSop&) const = default;
};

/// Sparse-activation anchor per atomic SOP: title plus a one-line abstract,
/// embedded for coarse Top-K pruning.
struct ProcedureCard {
    std::string sop_id;
    std::string title;
    std::string abstract; // single line, at most 300 chars
    EmbeddingVector embedding;

    /// The text the card is embedded and anchored with.
    std::string text() const { return title + " — " + abstract; }

    bool operator==(const ProcedureCard&) const = default;
};

/// Abstract provider for card synthesis.
class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual std::string abstract_for(const AtomicSop& sop) const = 0;
};

/// Offline rule: a "> Abstract:" line wins when present (it is declared
/// metadata in the canonical schema); otherwise the first sentence of the
/// body with markdown scaffolding lines skipped.
class FirstSentenceSummarizer final : public Summarizer {
public:
    std::string abstract_for(const AtomicSop& sop) const override;
};

class LlmSummarizer final : public Summarizer {
public:
    explicit LlmSummarizer(const ChatClient& chat) : chat_(chat) {}
    std::string abstract_for(const AtomicSop& sop) const override;

private:
    const ChatClient& chat_;
};

/// One SopDocument per .md file under dir_path (recursive), doc_id = relative
/// path, in lexicographic doc_id order. Missing directory is fatal; an
/// unreadable or empty file is skipped with a warning.
std::vector<SopDocument> load_corpus(const std::filesystem::path& dir_path);

/// Split at each markdown heading of exactly `heading_level` ('#' or '##').
/// The heading line stays in the unit's body and its text becomes the title;
/// content before the first heading is dropped. A document with no headings
/// yields one unit titled with the filename stem.
std::vector<AtomicSop> segment_document(const SopDocument& doc, int heading_level = 1);

/// Synthesize the card: abstract via the summarizer (falling back to the
/// offline rule with a warning if it throws), newlines scrubbed, truncated
/// to 300 chars; embedding over "title — abstract".
ProcedureCard make_procedure_card(const AtomicSop& sop, const Summarizer& summarizer,
                                  const SimilarityProvider& embedder);

} // namespace soprag
