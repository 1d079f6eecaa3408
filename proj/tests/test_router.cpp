#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "soprag/error.hpp"
#include "soprag/router.hpp"

using namespace soprag;

namespace {

KnowledgeBase tiny_kb() {
    HashEmbedder embedder(64);
    RulesExtractionBackend extraction;
    FirstSentenceSummarizer summarizer;
    AtomicSop sop;
    sop.sop_id = "a.md#0";
    sop.title = "Valve service";
    sop.body = "# Valve service\n## Entities\n- valve (asset)\n- ALM-203 (alarm)\n";
    sop.parent_doc = "a.md";
    return build_index({sop}, extraction, embedder, summarizer);
}

} // namespace

TEST_CASE("normalize_weights keeps an already-normalized triple exactly") {
    std::array<double, 3> w = normalize_weights({0.7, 0.0, 0.3});
    CHECK(w[0] == 0.7);
    CHECK(w[1] == 0.0);
    CHECK(w[2] == 0.3);
}

TEST_CASE("normalize_weights divides by the sum") {
    std::array<double, 3> w = normalize_weights({2.0, 2.0, 2.0});
    CHECK(w[0] == 1.0 / 3.0);
    CHECK(w[1] == 1.0 / 3.0);
    CHECK(w[2] == 1.0 / 3.0);
}

TEST_CASE("all-zero weights fall back to uniform") {
    std::array<double, 3> w = normalize_weights({0.0, 0.0, 0.0});
    CHECK(w[0] == 1.0 / 3.0);
    CHECK(w[1] == 1.0 / 3.0);
    CHECK(w[2] == 1.0 / 3.0);
}

TEST_CASE("negative or non-finite weights are rejected") {
    CHECK_THROWS_AS(normalize_weights({-0.1, 0.5, 0.6}), Error);
    CHECK_THROWS_AS(normalize_weights({std::nan(""), 0.5, 0.5}), Error);
    CHECK_THROWS_AS(normalize_weights({std::numeric_limits<double>::infinity(), 0.0, 0.0}),
                    Error);
}

TEST_CASE("normalization is scale-invariant") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> raw_dist(0.0, 10.0);
    std::uniform_real_distribution<double> scale_dist(0.01, 100.0);
    for (int i = 0; i < 1000; ++i) {
        std::array<double, 3> raw{raw_dist(rng), raw_dist(rng), raw_dist(rng)};
        double c = scale_dist(rng);
        std::array<double, 3> base = normalize_weights(raw);
        std::array<double, 3> scaled = normalize_weights({c * raw[0], c * raw[1], c * raw[2]});
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) {
            CHECK(base[k] >= 0.0);
            CHECK(std::abs(base[k] - scaled[k]) <= 1e-9);
            sum += base[k];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("heuristic cue counting, hand-traced") {
    KnowledgeBase kb = tiny_kb();
    RoutingDecision decision = heuristic_route("how to reset ALM-203 steps", kb);
    // flow cues: "how", "steps"; entity cues: "ALM-203"; causal: none
    CHECK(decision.raw_weights[0] == 1.0);
    CHECK(decision.raw_weights[1] == 0.0);
    CHECK(decision.raw_weights[2] == 2.0);
    CHECK(decision.weights[0] == 1.0 / 3.0);
    CHECK(decision.weights[1] == 0.0);
    CHECK(decision.weights[2] == 2.0 / 3.0);
    REQUIRE(decision.query_entities.size() == 1);
    CHECK(decision.query_entities[0] == "ALM-203");
    CHECK(decision.mode_used == RouterMode::heuristic);
}

TEST_CASE("heuristic matches KB entity labels as entity cues") {
    KnowledgeBase kb = tiny_kb();
    RoutingDecision decision = heuristic_route("inspect the valve now", kb);
    CHECK(decision.raw_weights[0] == 1.0);
    REQUIRE(decision.query_entities.size() == 1);
    CHECK(decision.query_entities[0] == "valve");
}

TEST_CASE("phrase cues count on consecutive tokens") {
    KnowledgeBase kb = tiny_kb();
    // "root cause" counts once as a phrase and once via the "cause" token;
    // cues are counted independently.
    RoutingDecision decision = heuristic_route("find the root cause of surge", kb);
    CHECK(decision.raw_weights[1] == 2.0);
    CHECK(decision.weights[1] == 1.0);
}

TEST_CASE("cue matching is case-insensitive; punctuation is stripped") {
    KnowledgeBase kb = tiny_kb();
    RoutingDecision a = heuristic_route("WHY does the compressor stall?", kb);
    CHECK(a.weights[1] == 1.0);
    RoutingDecision b = heuristic_route("How? (ALM-203)", kb);
    CHECK(b.raw_weights[0] == 1.0);
    CHECK(b.raw_weights[2] == 1.0);
    CHECK(b.query_entities == std::vector<std::string>{"ALM-203"});
}

TEST_CASE("cue-free queries route uniformly") {
    KnowledgeBase kb = tiny_kb();
    RoutingDecision decision = heuristic_route("something entirely unrelated", kb);
    CHECK(decision.weights[0] == 1.0 / 3.0);
    CHECK(decision.weights[1] == 1.0 / 3.0);
    CHECK(decision.weights[2] == 1.0 / 3.0);
    CHECK(decision.query_entities.empty());
}

TEST_CASE("heuristic routing is deterministic") {
    KnowledgeBase kb = tiny_kb();
    for (const char* q : {"how to reset ALM-203 steps", "why valve", "perform the procedure"}) {
        RoutingDecision a = heuristic_route(q, kb);
        RoutingDecision b = heuristic_route(q, kb);
        CHECK(a.weights == b.weights);
        CHECK(a.query_entities == b.query_entities);
        CHECK(a.intent == b.intent);
    }
}

TEST_CASE("empty queries cannot be routed") {
    KnowledgeBase kb = tiny_kb();
    CHECK_THROWS_AS(heuristic_route("  ", kb), Error);
    Router router(RouterMode::heuristic);
    CHECK_THROWS_AS(router.route("", kb), Error);
}

TEST_CASE("llm router parses weights as given") {
    KnowledgeBase kb = tiny_kb();

    SUBCASE("entity-oriented weights pass through") {
        fixtures::FakeChatClient chat({R"({"intent": "monitor HVAC status",
            "entities": ["HVAC equipment", "chilled water system"],
            "weights": {"entity": 0.7, "causal": 0.0, "flow": 0.3}})"});
        Router router(RouterMode::llm, &chat);
        RoutingDecision decision = router.route(
            "How can I view and monitor the real-time operating status of HVAC equipment in the "
            "chilled water and cooling water systems?",
            kb);
        CHECK(decision.mode_used == RouterMode::llm);
        CHECK(decision.weights[0] == 0.7);
        CHECK(decision.weights[1] == 0.0);
        CHECK(decision.weights[2] == 0.3);
        REQUIRE(decision.query_entities.size() == 2);
        CHECK(decision.query_entities[0] == "HVAC equipment");
    }

    SUBCASE("flow-oriented weights pass through") {
        fixtures::FakeChatClient chat({R"({"intent": "recover from aircraft upset",
            "entities": [],
            "weights": {"entity": 0.1, "causal": 0.1, "flow": 0.8}})"});
        Router router(RouterMode::llm, &chat);
        RoutingDecision decision = router.route(
            "What is the standard procedure for recovering from an aircraft upset or unusual "
            "attitude in flight?",
            kb);
        CHECK(decision.weights[0] == 0.1);
        CHECK(decision.weights[1] == 0.1);
        CHECK(decision.weights[2] == 0.8);
    }
}

TEST_CASE("llm router renormalizes off-scale weights") {
    KnowledgeBase kb = tiny_kb();
    fixtures::FakeChatClient chat({R"({"intent": "x", "entities": [],
        "weights": {"entity": 2.0, "causal": 2.0, "flow": 4.0}})"});
    Router router(RouterMode::llm, &chat);
    RoutingDecision decision = router.route("anything", kb);
    CHECK(decision.weights[0] == 0.25);
    CHECK(decision.weights[1] == 0.25);
    CHECK(decision.weights[2] == 0.5);
}

TEST_CASE("llm failure falls back to the heuristic and records it") {
    KnowledgeBase kb = tiny_kb();

    SUBCASE("transport failure") {
        fixtures::FakeChatClient chat = fixtures::FakeChatClient::failing();
        Router router(RouterMode::llm, &chat);
        RoutingDecision decision = router.route("how to reset ALM-203 steps", kb);
        CHECK(decision.mode_used == RouterMode::heuristic);
        CHECK(decision.weights[2] == 2.0 / 3.0);
    }

    SUBCASE("garbage response") {
        fixtures::FakeChatClient chat({"not json at all"});
        Router router(RouterMode::llm, &chat);
        RoutingDecision decision = router.route("how to reset ALM-203 steps", kb);
        CHECK(decision.mode_used == RouterMode::heuristic);
    }

    SUBCASE("negative llm weights") {
        fixtures::FakeChatClient chat({R"({"intent": "x", "entities": [],
            "weights": {"entity": -1.0, "causal": 0.5, "flow": 0.5}})"});
        Router router(RouterMode::llm, &chat);
        RoutingDecision decision = router.route("how to reset ALM-203 steps", kb);
        CHECK(decision.mode_used == RouterMode::heuristic);
    }

    // whatever the backend does, the output weights stay a distribution
    fixtures::FakeChatClient chat({R"({"weights": {"entity": "bad"}})"});
    Router router(RouterMode::llm, &chat);
    RoutingDecision decision = router.route("why is the valve stuck", kb);
    double sum = decision.weights[0] + decision.weights[1] + decision.weights[2];
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    for (double w : decision.weights) CHECK(w >= 0.0);
}

TEST_CASE("llm router mode requires a chat client") {
    CHECK_THROWS_AS(Router(RouterMode::llm, nullptr), ConfigError);
}

TEST_CASE("weight log appends CSV rows with quoting") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path()
                    / ("soprag_weights_" + std::to_string(std::random_device{}()) + ".csv");
    {
        WeightLog log(path);
        log.append("q1", {0.5, 0.25, 0.25}, "entity-focused", "heuristic");
        log.append("q2", {1.0, 0.0, 0.0}, "find valve, then reset", "llm");
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "query_id,w_entity,w_causal,w_flow,intent,mode");
    std::getline(in, line);
    CHECK(line == "q1,0.500000,0.250000,0.250000,entity-focused,heuristic");
    std::getline(in, line);
    CHECK(line == "q2,1.000000,0.000000,0.000000,\"find valve, then reset\",llm");
    fs::remove(path);
}
