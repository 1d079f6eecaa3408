#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "soprag/error.hpp"
#include "soprag/evaluation.hpp"
#include "soprag/router.hpp"

using namespace soprag;
namespace fs = std::filesystem;

namespace {

KnowledgeBase canonical_kb(int n) {
    HashEmbedder embedder(256);
    RulesExtractionBackend extraction;
    FirstSentenceSummarizer summarizer;
    return build_index(fixtures::canonical_corpus(n), extraction, embedder, summarizer);
}

std::optional<int> absent = std::nullopt;

} // namespace

TEST_CASE("mrr definition cases") {
    CHECK(mrr({2}) == 0.5);
    CHECK(mrr({3, 1, absent}) == doctest::Approx(0.4444).epsilon(1e-4));
    CHECK(mrr({1, 1, 1}) == 1.0);
    CHECK(mrr({1, 3}) == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(mrr({}), Error);
}

TEST_CASE("acc@k definition cases") {
    CHECK(acc_at_k({3}, 3) == 1.0); // boundary inclusive
    CHECK(acc_at_k({absent}, 5) == 0.0);
    CHECK(acc_at_k({1, 4, 2}, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK_THROWS_AS(acc_at_k({}, 3), Error);
    CHECK_THROWS_AS(acc_at_k({1}, 0), Error);
}

TEST_CASE("run_eval with verbatim-title queries gets Acc@1 = 1") {
    KnowledgeBase kb = canonical_kb(6);
    HashEmbedder embedder(256);
    Router router(RouterMode::heuristic);

    std::vector<QueryRecord> queries;
    int i = 0;
    for (const auto& [sop_id, sop] : kb.sops) {
        QueryRecord rec;
        rec.query_id = "t" + std::to_string(i++);
        rec.query = sop.title;
        rec.gold_sop_id = sop_id;
        rec.category = QueryCategory::mixed;
        queries.push_back(rec);
    }
    EvalReport report = run_eval(kb, embedder, router, queries, RetrievalConfig{});
    CHECK(report.overall.acc1 == 1.0);
    CHECK(report.overall.mrr == 1.0);
}

TEST_CASE("run_eval validates gold ids before retrieving") {
    KnowledgeBase kb = canonical_kb(2);
    HashEmbedder embedder(256);
    Router router(RouterMode::heuristic);
    std::vector<QueryRecord> queries = {{"q0", "anything", "ghost.md#9", QueryCategory::mixed}};
    try {
        run_eval(kb, embedder, router, queries, RetrievalConfig{});
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("ghost.md#9") != std::string::npos);
    }
}

TEST_CASE("run_eval is deterministic and keeps acc monotonicity") {
    KnowledgeBase kb = canonical_kb(8);
    HashEmbedder embedder(256);
    Router router(RouterMode::heuristic);
    std::vector<QueryRecord> queries = generate_queries(kb, 3, QueryGenMode::template_mode);

    EvalReport a = run_eval(kb, embedder, router, queries, RetrievalConfig{});
    EvalReport b = run_eval(kb, embedder, router, queries, RetrievalConfig{});
    CHECK(to_json(a).dump() == to_json(b).dump());

    CHECK(a.overall.acc1 <= a.overall.acc3);
    CHECK(a.overall.acc3 <= a.overall.acc5);
    for (const auto& [category, block] : a.per_category) {
        CHECK(block.acc1 <= block.acc3);
        CHECK(block.acc3 <= block.acc5);
    }
    // N_res-truncated lists keep acc@1 <= MRR <= acc@N_res
    CHECK(a.overall.acc1 <= a.overall.mrr + 1e-12);
    double acc_at_depth = acc_at_k([&] {
        std::vector<std::optional<int>> ranks;
        for (const auto& q : a.per_query) ranks.push_back(q.rank);
        return ranks;
    }(), a.truncation_depth);
    CHECK(a.overall.mrr <= acc_at_depth + 1e-12);

    // per-query log is sorted by query_id
    for (std::size_t i = 1; i < a.per_query.size(); ++i) {
        CHECK(a.per_query[i - 1].query_id < a.per_query[i].query_id);
    }
}

TEST_CASE("run_eval under an ablation records it in the report") {
    KnowledgeBase kb = canonical_kb(5);
    HashEmbedder embedder(256);
    Router router(RouterMode::heuristic);
    std::vector<QueryRecord> queries = generate_queries(kb, 2, QueryGenMode::template_mode);

    RetrievalConfig config;
    config.ablation = Ablation::uniform_weights;
    EvalReport report = run_eval(kb, embedder, router, queries, config);
    CHECK(report.ablation == "uniform_weights");
    CHECK(report.overall.count == queries.size());
    CHECK(report.config_snapshot.at("ablation") == "uniform_weights");
    CHECK(report.overall.acc1 <= report.overall.acc3);
    CHECK(report.overall.acc3 <= report.overall.acc5);
}

TEST_CASE("run_eval writes the weight log when given one") {
    KnowledgeBase kb = canonical_kb(3);
    HashEmbedder embedder(256);
    Router router(RouterMode::heuristic);
    std::vector<QueryRecord> queries = generate_queries(kb, 1, QueryGenMode::template_mode);

    fs::path path = fs::temp_directory_path()
                    / ("soprag_eval_weights_" + std::to_string(std::random_device{}()) + ".csv");
    {
        WeightLog log(path);
        run_eval(kb, embedder, router, queries, RetrievalConfig{}, &log);
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "query_id,w_entity,w_causal,w_flow,intent,mode");
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == static_cast<int>(queries.size()));
    fs::remove(path);
}

TEST_CASE("template query generation is deterministic and cycles categories") {
    KnowledgeBase kb = canonical_kb(4);
    auto a = generate_queries(kb, 5, QueryGenMode::template_mode);
    auto b = generate_queries(kb, 5, QueryGenMode::template_mode);
    CHECK(a == b);
    REQUIRE(a.size() == 20);

    // per SOP: entity, causal, flow, mixed, entity
    CHECK(a[0].category == QueryCategory::entity);
    CHECK(a[1].category == QueryCategory::causal);
    CHECK(a[2].category == QueryCategory::flow);
    CHECK(a[3].category == QueryCategory::mixed);
    CHECK(a[4].category == QueryCategory::entity);
    CHECK(a[0].query == a[4].query);

    fixtures::SopPieces pieces = fixtures::canonical_pieces(0);
    CHECK(a[0].query == "What should I do about " + pieces.code + "?");
    CHECK(a[1].query == "Why does " + pieces.state + " happen and what resolves it?");
    CHECK(a[2].query.starts_with("How do I "));

    // query ids unique
    std::set<std::string> ids;
    for (const auto& rec : a) CHECK(ids.insert(rec.query_id).second);
}

TEST_CASE("template generation falls back to the mixed template") {
    HashEmbedder embedder(256);
    RulesExtractionBackend extraction;
    FirstSentenceSummarizer summarizer;
    AtomicSop bare;
    bare.sop_id = "bare.md#0";
    bare.title = "Bare procedure";
    bare.body = "# Bare procedure\nNothing structured.\n";
    bare.parent_doc = "bare.md";
    KnowledgeBase kb = build_index({bare}, extraction, embedder, summarizer);

    auto queries = generate_queries(kb, 3, QueryGenMode::template_mode);
    REQUIRE(queries.size() == 3);
    for (const auto& rec : queries) {
        CHECK(rec.category == QueryCategory::mixed);
        CHECK(rec.query == "Bare procedure procedure");
    }
}

TEST_CASE("llm query generation parses the examiner contract") {
    KnowledgeBase kb = canonical_kb(1);
    fixtures::FakeChatClient chat({R"({"questions": [
        {"query": "Where is the reset switch?", "category": "entity"},
        {"query": "Why would it trip?", "category": "causal"}
    ]})"});
    auto queries = generate_queries(kb, 2, QueryGenMode::llm, &chat);
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].query == "Where is the reset switch?");
    CHECK(queries[0].category == QueryCategory::entity);
    CHECK(queries[0].gold_sop_id == "sop0.md#0");
    CHECK(queries[1].query_id == "sop0.md#0::q1");

    fixtures::FakeChatClient garbage({"not json"});
    CHECK_THROWS_AS(generate_queries(kb, 2, QueryGenMode::llm, &garbage), ParseError);
    CHECK_THROWS_AS(generate_queries(kb, 2, QueryGenMode::llm, nullptr), ConfigError);
}

TEST_CASE("queries round-trip through jsonl") {
    KnowledgeBase kb = canonical_kb(3);
    auto queries = generate_queries(kb, 4, QueryGenMode::template_mode);
    fs::path path = fs::temp_directory_path()
                    / ("soprag_queries_" + std::to_string(std::random_device{}()) + ".jsonl");
    save_queries(queries, path);
    auto loaded = load_queries(path);
    CHECK(loaded == queries);
    fs::remove(path);
}

TEST_CASE("judge parses, recomputes, and flags") {
    SUBCASE("all criteria met") {
        fixtures::FakeChatClient chat({R"({"has_step_by_step": 1, "is_precise": 1,
            "is_concise": 1, "is_clear": 1, "score": 1.0, "reasoning": "solid"})"});
        QualityVerdict verdict = judge_sop_quality("q", "a", "body", &chat);
        CHECK(verdict.score == 1.0);
        CHECK_FALSE(verdict.score_adjusted);
        CHECK(verdict.reasoning == "solid");
    }
    SUBCASE("three of four") {
        fixtures::FakeChatClient chat({R"({"has_step_by_step": 1, "is_precise": 1,
            "is_concise": 0, "is_clear": 1, "score": 0.75, "reasoning": "wordy"})"});
        QualityVerdict verdict = judge_sop_quality("q", "a", "body", &chat);
        CHECK(verdict.score == 0.75);
        CHECK_FALSE(verdict.score_adjusted);
    }
    SUBCASE("disagreeing score is recomputed and flagged") {
        fixtures::FakeChatClient chat({R"({"has_step_by_step": 1, "is_precise": 1,
            "is_concise": 0, "is_clear": 1, "score": 0.9, "reasoning": "optimistic"})"});
        QualityVerdict verdict = judge_sop_quality("q", "a", "body", &chat);
        CHECK(verdict.score == 0.75);
        CHECK(verdict.score_adjusted);
    }
    SUBCASE("judging has no offline mode") {
        CHECK_THROWS_AS(judge_sop_quality("q", "a", "body", nullptr), Error);
    }
    SUBCASE("non-binary criteria are rejected") {
        fixtures::FakeChatClient chat({R"({"has_step_by_step": 2, "is_precise": 1,
            "is_concise": 1, "is_clear": 1, "score": 1.0})"});
        CHECK_THROWS_AS(judge_sop_quality("q", "a", "body", &chat), ParseError);
    }
}

TEST_CASE("report JSON includes the full structure") {
    KnowledgeBase kb = canonical_kb(4);
    HashEmbedder embedder(256);
    Router router(RouterMode::heuristic);
    auto queries = generate_queries(kb, 2, QueryGenMode::template_mode);
    EvalReport report = run_eval(kb, embedder, router, queries, RetrievalConfig{});

    nlohmann::json j = to_json(report);
    CHECK(j.contains("metrics"));
    CHECK(j.contains("per_category"));
    CHECK(j.contains("per_query"));
    CHECK(j.at("truncation_depth") == 10);
    CHECK(j.at("per_query").size() == queries.size());

    fs::path path = fs::temp_directory_path()
                    / ("soprag_report_" + std::to_string(std::random_device{}()) + ".json");
    save_report(report, path);
    CHECK(fs::exists(path));
    fs::remove(path);
}
