#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "soprag/corpus.hpp"
#include "soprag/error.hpp"
#include "soprag/text.hpp"

using namespace soprag;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path()
               / ("soprag_corpus_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    void write(const std::string& name, const std::string& content) const {
        fs::create_directories((path / name).parent_path());
        std::ofstream out(path / name, std::ios::binary);
        out << content;
    }
};

SopDocument doc_with(const std::string& body, const std::string& doc_id = "doc.md") {
    return SopDocument{doc_id, "/tmp/" + doc_id, body};
}

} // namespace

TEST_CASE("load_corpus reads .md files in doc_id order") {
    TempDir dir;
    dir.write("b.md", "# B\ntext\n");
    dir.write("a.md", "# A\ntext\n");
    dir.write("sub/c.md", "# C\ntext\n");
    dir.write("notes.txt", "not markdown");

    auto docs = load_corpus(dir.path);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].doc_id == "a.md");
    CHECK(docs[1].doc_id == "b.md");
    CHECK(docs[2].doc_id == "sub/c.md");
}

TEST_CASE("load_corpus on an empty directory yields an empty list") {
    TempDir dir;
    CHECK(load_corpus(dir.path).empty());
}

TEST_CASE("load_corpus on a missing directory is fatal") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/soprag/corpus"), Error);
}

TEST_CASE("load_corpus skips empty files with a warning") {
    TempDir dir;
    dir.write("ok.md", "# T\nbody\n");
    dir.write("empty.md", "");
    auto docs = load_corpus(dir.path);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].doc_id == "ok.md");
}

TEST_CASE("segment_document splits at level-1 headings") {
    auto sops = segment_document(doc_with("# One\na\n# Two\nb\n# Three\nc\n"), 1);
    REQUIRE(sops.size() == 3);
    CHECK(sops[0].title == "One");
    CHECK(sops[1].title == "Two");
    CHECK(sops[2].title == "Three");
    CHECK(sops[0].sop_id == "doc.md#0");
    CHECK(sops[2].sop_id == "doc.md#2");
    CHECK(sops[0].parent_doc == "doc.md");
    // level-2 headings stay inside the unit body
    auto nested = segment_document(doc_with("# One\n## Steps\n1. x\n"), 1);
    REQUIRE(nested.size() == 1);
    CHECK(nested[0].body.find("## Steps") != std::string::npos);
}

TEST_CASE("document with no headings becomes one unit titled by filename") {
    auto sops = segment_document(doc_with("just prose\nmore prose\n", "dir/pump_reset.md"), 1);
    REQUIRE(sops.size() == 1);
    CHECK(sops[0].title == "pump_reset");
    CHECK(sops[0].body == "just prose\nmore prose");
}

TEST_CASE("preamble before the first heading is dropped") {
    auto sops = segment_document(doc_with("preamble\n# A\nx\n# B\ny"), 1);
    REQUIRE(sops.size() == 2);
    CHECK(sops[0].title == "A");
    CHECK(sops[0].body == "# A\nx");
    CHECK(sops[1].title == "B");
    CHECK(sops[1].body == "# B\ny");
}

TEST_CASE("heading_level 2 splits at ## only") {
    auto sops = segment_document(doc_with("# Top\n## First\na\n## Second\nb\n"), 2);
    REQUIRE(sops.size() == 2);
    CHECK(sops[0].title == "First");
    CHECK(sops[1].title == "Second");
    CHECK_THROWS_AS(segment_document(doc_with("# X\n"), 3), Error);
}

TEST_CASE("segmentation is a partition of the body lines") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::string body = fixtures::random_document(rng);
        SopDocument doc = doc_with(body);
        auto sops = segment_document(doc, 1);
        REQUIRE(!sops.empty());

        std::vector<std::string> original = text::split_lines(body);
        std::vector<std::string> reassembled;
        bool any_heading = false;
        std::size_t first_heading = original.size();
        for (std::size_t i = 0; i < original.size(); ++i) {
            if (original[i].starts_with("# ")) {
                first_heading = i;
                any_heading = true;
                break;
            }
        }
        if (any_heading) {
            for (std::size_t i = 0; i < first_heading; ++i) reassembled.push_back(original[i]);
        }
        for (const auto& sop : sops) {
            for (const auto& line : text::split_lines(sop.body)) reassembled.push_back(line);
        }
        CHECK(reassembled == original);
    }
}

TEST_CASE("offline abstract takes the first sentence") {
    AtomicSop sop;
    sop.sop_id = "doc.md#0";
    sop.title = "Pump service";
    sop.body = "Shut down pump before service. Then lock out the breaker.";

    HashEmbedder embedder(64);
    ProcedureCard card = make_procedure_card(sop, FirstSentenceSummarizer(), embedder);
    CHECK(card.abstract == "Shut down pump before service.");
    CHECK(card.sop_id == sop.sop_id);
    CHECK(std::abs(l2_norm(card.embedding) - 1.0) < 1e-9);
}

TEST_CASE("offline abstract prefers a declared abstract line") {
    AtomicSop sop;
    sop.sop_id = "doc.md#0";
    sop.title = "Pump service";
    sop.body = "# Pump service\n> Abstract: Restores flow after a trip.\n## Steps\n1. Reset\n";
    CHECK(FirstSentenceSummarizer().abstract_for(sop) == "Restores flow after a trip.");
}

TEST_CASE("card creation is deterministic") {
    AtomicSop sop;
    sop.sop_id = "doc.md#0";
    sop.title = "Pump service";
    sop.body = "Shut down pump before service. Then continue.";
    HashEmbedder embedder(64);
    ProcedureCard a = make_procedure_card(sop, FirstSentenceSummarizer(), embedder);
    ProcedureCard b = make_procedure_card(sop, FirstSentenceSummarizer(), embedder);
    CHECK(a == b);
}

TEST_CASE("summarizer newlines are scrubbed and long abstracts truncated") {
    struct NoisySummarizer final : Summarizer {
        std::string abstract_for(const AtomicSop&) const override {
            return "line one\nline two\r\nline three";
        }
    };
    AtomicSop sop;
    sop.sop_id = "doc.md#0";
    sop.title = "T";
    sop.body = "body text here.";
    HashEmbedder embedder(64);
    ProcedureCard card = make_procedure_card(sop, NoisySummarizer(), embedder);
    CHECK(card.abstract == "line one line two line three");
    CHECK(card.abstract.find('\n') == std::string::npos);

    struct LongSummarizer final : Summarizer {
        std::string abstract_for(const AtomicSop&) const override {
            return std::string(500, 'x');
        }
    };
    ProcedureCard long_card = make_procedure_card(sop, LongSummarizer(), embedder);
    CHECK(long_card.abstract.size() == 300);
}

TEST_CASE("summarizer failure falls back to the first-sentence rule") {
    struct BrokenSummarizer final : Summarizer {
        std::string abstract_for(const AtomicSop&) const override {
            throw BackendError("backend down");
        }
    };
    AtomicSop sop;
    sop.sop_id = "doc.md#0";
    sop.title = "T";
    sop.body = "First sentence here. Second.";
    HashEmbedder embedder(64);
    ProcedureCard card = make_procedure_card(sop, BrokenSummarizer(), embedder);
    CHECK(card.abstract == "First sentence here.");
}

TEST_CASE("untitled SOP cannot make a card") {
    AtomicSop sop;
    sop.sop_id = "doc.md#0";
    sop.title = "   ";
    sop.body = "text";
    HashEmbedder embedder(64);
    CHECK_THROWS_AS(make_procedure_card(sop, FirstSentenceSummarizer(), embedder), Error);
}

TEST_CASE("llm summarizer passes the procedure through the chat contract") {
    fixtures::FakeChatClient chat({"Resets the condenser loop after a trip."});
    AtomicSop sop;
    sop.sop_id = "doc.md#0";
    sop.title = "Condenser reset";
    sop.body = "# Condenser reset\nsome text\n";
    HashEmbedder embedder(64);
    ProcedureCard card = make_procedure_card(sop, LlmSummarizer(chat), embedder);
    CHECK(card.abstract == "Resets the condenser loop after a trip.");
    REQUIRE(chat.calls().size() == 1);
    CHECK(chat.calls()[0].second.find("Condenser reset") != std::string::npos);
}
