#include "soprag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "soprag/error.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kAbstractMaxChars = 300;

std::string first_sentence_abstract(const std::string& body) {
    std::vector<std::string> lines = text::split_lines(body);
    std::string prose;
    for (const auto& line : lines) {
        std::string t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.starts_with(">")) {
            std::string quoted = text::trim(t.substr(1));
            if (text::to_lower(quoted).starts_with("abstract:")) {
                return text::trim(quoted.substr(std::string("abstract:").size()));
            }
            continue;
        }
        if (!prose.empty()) prose.push_back(' ');
        prose += t;
    }
    if (prose.empty()) prose = text::strip_newlines(body);
    std::size_t cut = prose.find(". ");
    if (cut != std::string::npos) prose = prose.substr(0, cut + 1);
    return prose;
}

std::string sanitize_abstract(std::string abstract) {
    abstract = text::strip_newlines(abstract);
    if (abstract.size() > kAbstractMaxChars) abstract.resize(kAbstractMaxChars);
    return abstract;
}

/// Heading of exactly `level` hashes followed by whitespace (or nothing).
bool is_heading(const std::string& line, int level, std::string* title_out) {
    std::size_t hashes = 0;
    while (hashes < line.size() && line[hashes] == '#') ++hashes;
    if (hashes != static_cast<std::size_t>(level)) return false;
    if (hashes < line.size() && line[hashes] != ' ' && line[hashes] != '\t') return false;
    if (title_out != nullptr) *title_out = text::trim(line.substr(hashes));
    return true;
}

std::string filename_stem(const std::string& doc_id) {
    return fs::path(doc_id).stem().string();
}

} // namespace

std::vector<SopDocument> load_corpus(const fs::path& dir_path) {
    if (!fs::exists(dir_path) || !fs::is_directory(dir_path)) {
        throw Error("corpus directory not found: " + dir_path.string());
    }
    std::vector<SopDocument> docs;
    for (const auto& entry : fs::recursive_directory_iterator(dir_path)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".md") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) {
            text::warn("skipping unreadable file " + entry.path().string());
            continue;
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        std::string body = buffer.str();
        if (text::trim(body).empty()) {
            text::warn("skipping empty file " + entry.path().string());
            continue;
        }
        SopDocument doc;
        doc.doc_id = fs::relative(entry.path(), dir_path).generic_string();
        doc.source_path = fs::absolute(entry.path()).string();
        doc.body = std::move(body);
        docs.push_back(std::move(doc));
    }
    std::sort(docs.begin(), docs.end(),
              [](const SopDocument& a, const SopDocument& b) { return a.doc_id < b.doc_id; });
    return docs;
}

std::vector<AtomicSop> segment_document(const SopDocument& doc, int heading_level) {
    if (heading_level != 1 && heading_level != 2) {
        throw Error("heading_level must be 1 or 2, got " + std::to_string(heading_level));
    }
    std::vector<std::string> lines = text::split_lines(doc.body);

    struct Unit {
        std::string title;
        std::vector<std::string> body_lines;
    };
    std::vector<Unit> units;
    bool seen_heading = false;
    for (const auto& line : lines) {
        std::string title;
        if (is_heading(line, heading_level, &title)) {
            seen_heading = true;
            units.push_back(Unit{title, {line}});
        } else if (seen_heading) {
            units.back().body_lines.push_back(line);
        }
        // Lines before the first heading are front-matter, not a procedure.
    }
    if (!seen_heading) {
        units.push_back(Unit{filename_stem(doc.doc_id), lines});
    }

    std::vector<AtomicSop> sops;
    sops.reserve(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        AtomicSop sop;
        sop.sop_id = doc.doc_id + "#" + std::to_string(i);
        sop.title = units[i].title.empty() ? sop.sop_id : units[i].title;
        std::string body;
        for (std::size_t j = 0; j < units[i].body_lines.size(); ++j) {
            if (j > 0) body.push_back('\n');
            body += units[i].body_lines[j];
        }
        sop.body = std::move(body);
        sop.parent_doc = doc.doc_id;
        sops.push_back(std::move(sop));
    }
    return sops;
}

std::string FirstSentenceSummarizer::abstract_for(const AtomicSop& sop) const {
    return first_sentence_abstract(sop.body);
}

std::string LlmSummarizer::abstract_for(const AtomicSop& sop) const {
    const std::string system_prompt =
        "You write one-line abstracts for Standard Operating Procedures. "
        "Reply with a single sentence (no newline, at most 300 characters) summarizing "
        "what the procedure accomplishes and when it applies. Reply with the sentence only.";
    return chat_.complete(system_prompt, "Title: " + sop.title + "\n\n" + sop.body);
}

ProcedureCard make_procedure_card(const AtomicSop& sop, const Summarizer& summarizer,
                                  const SimilarityProvider& embedder) {
    if (text::trim(sop.title).empty()) {
        throw Error("cannot make a procedure card for an untitled SOP: " + sop.sop_id);
    }
    std::string abstract;
    try {
        abstract = summarizer.abstract_for(sop);
    } catch (const std::exception& e) {
        text::warn("summarizer failed for " + sop.sop_id + " (" + e.what()
                   + "); using first-sentence rule");
        abstract = FirstSentenceSummarizer().abstract_for(sop);
    }
    ProcedureCard card;
    card.sop_id = sop.sop_id;
    card.title = sop.title;
    card.abstract = sanitize_abstract(std::move(abstract));
    card.embedding = embedder.embed(card.text());
    return card;
}

} // namespace soprag
