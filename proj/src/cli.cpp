#include "soprag/cli.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "soprag/config.hpp"
#include "soprag/corpus.hpp"
#include "soprag/error.hpp"
#include "soprag/evaluation.hpp"
#include "soprag/generation.hpp"
#include "soprag/knowledge_base.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/service.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_shutdown{false};

void handle_signal(int) {
    g_shutdown.store(true);
}

EngineConfig config_or_default(const std::string& config_path) {
    if (config_path.empty()) return EngineConfig{};
    return load_config(config_path);
}

struct OpenedIndex {
    KnowledgeBase kb;
    Engine engine;
};

/// Load an index and rebuild the runtime engine from its config snapshot
/// (or the session config when one is passed, checked against the manifest).
OpenedIndex open_index(const std::string& index_dir, const std::string& config_path) {
    OpenedIndex opened;
    opened.kb = load(index_dir);

    EngineConfig config;
    if (!config_path.empty()) {
        config = load_config(config_path);
        std::size_t expected = config.embedding.dim;
        if (expected != 0 && expected != opened.kb.metadata.embedding_dim) {
            throw ConfigError("index embedding dim "
                              + std::to_string(opened.kb.metadata.embedding_dim)
                              + " does not match configured dim " + std::to_string(expected));
        }
        if (config.embedding.mode != opened.kb.metadata.embedding_mode) {
            throw ConfigError("index was built with embedding mode '"
                              + opened.kb.metadata.embedding_mode + "', session configures '"
                              + config.embedding.mode + "'");
        }
    } else if (!opened.kb.metadata.config_json.empty()) {
        config = EngineConfig::from_json(nlohmann::json::parse(opened.kb.metadata.config_json));
    }
    config.embedding.dim = opened.kb.metadata.embedding_dim;
    opened.engine = Engine::from_config(config);
    return opened;
}

int cmd_build(const std::string& corpus_dir, const std::string& out_dir,
              const std::string& config_path) {
    Engine engine = Engine::from_config(config_or_default(config_path));

    std::vector<AtomicSop> sops;
    for (const SopDocument& doc : load_corpus(corpus_dir)) {
        for (AtomicSop& sop : segment_document(doc, engine.config.heading_level)) {
            sops.push_back(std::move(sop));
        }
    }
    KnowledgeBase kb = build_index(sops, *engine.extraction, *engine.provider,
                                   *engine.summarizer, engine.config.to_json().dump());
    save(kb, out_dir);
    std::cout << "indexed " << kb.cards.size() << " procedures ("
              << kb.entity_graph.nodes.size() << " entities, "
              << kb.causal_graph.nodes.size() << " states) -> " << out_dir << "\n";
    return 0;
}

int cmd_add(const std::string& index_dir, const std::string& file_path,
            const std::string& config_path) {
    OpenedIndex opened = open_index(index_dir, config_path);

    std::ifstream in(file_path, std::ios::binary);
    if (!in) throw Error("cannot read " + file_path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    SopDocument doc;
    doc.doc_id = fs::path(file_path).filename().generic_string();
    doc.source_path = fs::absolute(file_path).string();
    doc.body = buffer.str();
    if (text::trim(doc.body).empty()) throw Error("file is empty: " + file_path);

    KnowledgeBase kb = std::move(opened.kb);
    std::size_t before = kb.cards.size();
    for (const AtomicSop& sop : segment_document(doc, opened.engine.config.heading_level)) {
        kb = merge_incremental(kb, sop, *opened.engine.extraction, *opened.engine.provider,
                               *opened.engine.summarizer, opened.engine.config.merge_threshold);
    }
    save(kb, index_dir);
    std::cout << "merged " << (kb.cards.size() - before) << " procedure(s); index now holds "
              << kb.cards.size() << "\n";
    return 0;
}

int cmd_query(const std::string& index_dir, const std::string& query, int top, bool explain,
              bool answer, const std::string& config_path) {
    OpenedIndex opened = open_index(index_dir, config_path);
    RetrievalConfig config = opened.engine.config.retrieval;
    if (top > 0) config.result_list_size = top;

    RetrievalOutput output =
        retrieve(query, opened.kb, *opened.engine.provider, *opened.engine.router, config);
    if (explain) {
        nlohmann::json results = nlohmann::json::array();
        for (const auto& result : output.results) results.push_back(to_json(result));
        std::cout << results.dump(2) << "\n";
    } else {
        for (const auto& result : output.results) {
            std::cout << result.rank << ". " << result.sop_id << "  score="
                      << result.aggregate << "  " << result.title << "\n";
        }
    }
    if (answer && !output.results.empty()) {
        const RankedResult& top_result = output.results.front();
        const FlowGraph& flow = opened.kb.flow_graphs.at(top_result.sop_id);
        if (flow.steps.empty()) {
            std::cout << "\n" << top_result.title << "\n";
        } else {
            LinearizedProcedure linearized = linearize_flow(flow, top_result.title);
            std::cout << "\n"
                      << generate_answer(query, linearized, opened.engine.chat.get()) << "\n";
        }
    }
    return 0;
}

int cmd_eval(const std::string& index_dir, const std::string& queries_path,
             const std::string& ablation, const std::string& report_path,
             const std::string& config_path) {
    OpenedIndex opened = open_index(index_dir, config_path);
    RetrievalConfig config = opened.engine.config.retrieval;
    if (!ablation.empty()) config.ablation = ablation_from_string(ablation);

    std::vector<QueryRecord> queries = load_queries(queries_path);

    std::unique_ptr<WeightLog> weight_log;
    if (!report_path.empty()) {
        fs::path weights_path = fs::path(report_path).parent_path() / "weights.csv";
        if (fs::exists(weights_path)) fs::remove(weights_path);
        weight_log = std::make_unique<WeightLog>(weights_path);
    }
    EvalReport report = run_eval(opened.kb, *opened.engine.provider, *opened.engine.router,
                                 queries, config, weight_log.get());
    if (!report_path.empty()) save_report(report, report_path);

    std::cout << "queries=" << report.overall.count << " ablation=" << report.ablation
              << " MRR=" << report.overall.mrr << " Acc@1=" << report.overall.acc1
              << " Acc@3=" << report.overall.acc3 << " Acc@5=" << report.overall.acc5 << "\n";
    return 0;
}

int cmd_gen_queries(const std::string& index_dir, int per_sop, const std::string& out_path,
                    const std::string& mode, const std::string& config_path) {
    OpenedIndex opened = open_index(index_dir, config_path);
    QueryGenMode gen_mode;
    if (mode == "template") {
        gen_mode = QueryGenMode::template_mode;
    } else if (mode == "llm") {
        gen_mode = QueryGenMode::llm;
    } else {
        throw ConfigError("mode must be 'template' or 'llm'");
    }
    std::vector<QueryRecord> queries =
        generate_queries(opened.kb, per_sop, gen_mode, opened.engine.chat.get());
    save_queries(queries, out_path);
    std::cout << "wrote " << queries.size() << " queries -> " << out_path << "\n";
    return 0;
}

int cmd_serve(const std::string& index_dir, int port, const std::string& config_path) {
    OpenedIndex opened = open_index(index_dir, config_path);
    QueryService service(opened.kb, *opened.engine.provider, *opened.engine.router,
                         opened.engine.config.retrieval, opened.engine.chat.get());

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    int bound = service.start(port);
    std::cout << "serving index " << index_dir << " on port " << bound << "\n";
    while (!g_shutdown.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    std::cout << "shutting down\n";
    service.stop();
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Structure-aware SOP retrieval engine"};
    app.require_subcommand(1);

    std::string corpus_dir;
    std::string index_dir;
    std::string out_path;
    std::string config_path;
    std::string file_path;
    std::string query;
    std::string queries_path;
    std::string ablation;
    std::string report_path;
    std::string gen_mode = "template";
    int top = 0;
    int per_sop = 0;
    int port = 8080;
    bool explain = false;
    bool answer = false;

    auto* build = app.add_subcommand("build", "Build an index from a markdown corpus");
    build->add_option("--corpus", corpus_dir, "Directory of .md SOP files")->required();
    build->add_option("--out", out_path, "Output index directory")->required();
    build->add_option("--config", config_path, "JSON engine config");

    auto* add = app.add_subcommand("add", "Merge one markdown file into an existing index");
    add->add_option("--index", index_dir, "Index directory")->required();
    add->add_option("--file", file_path, "Markdown file to merge")->required();
    add->add_option("--config", config_path, "JSON engine config");

    auto* query_cmd = app.add_subcommand("query", "Retrieve procedures for a query");
    query_cmd->add_option("--index", index_dir, "Index directory")->required();
    query_cmd->add_option("--q", query, "Query text")->required();
    query_cmd->add_option("--top", top, "Result list size");
    query_cmd->add_flag("--explain", explain, "Print the score decomposition as JSON");
    query_cmd->add_flag("--answer", answer, "Generate a step-by-step answer for the top hit");
    query_cmd->add_option("--config", config_path, "JSON engine config");

    auto* eval = app.add_subcommand("eval", "Evaluate retrieval over a gold query set");
    eval->add_option("--index", index_dir, "Index directory")->required();
    eval->add_option("--queries", queries_path, "queries.jsonl with gold labels")->required();
    eval->add_option("--ablation", ablation,
                     "none|no_pc|no_entity|no_causal|no_flow|uniform_weights");
    eval->add_option("--report", report_path, "Write the full report JSON here");
    eval->add_option("--config", config_path, "JSON engine config");

    auto* gen = app.add_subcommand("gen-queries", "Generate evaluation queries from the index");
    gen->add_option("--index", index_dir, "Index directory")->required();
    gen->add_option("--per-sop", per_sop, "Questions per procedure")->required();
    gen->add_option("--out", out_path, "Output queries.jsonl")->required();
    gen->add_option("--mode", gen_mode, "template|llm");
    gen->add_option("--config", config_path, "JSON engine config");

    auto* serve = app.add_subcommand("serve", "Run the HTTP query service");
    serve->add_option("--index", index_dir, "Index directory")->required();
    serve->add_option("--port", port, "Listen port");
    serve->add_option("--config", config_path, "JSON engine config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (build->parsed()) return cmd_build(corpus_dir, out_path, config_path);
        if (add->parsed()) return cmd_add(index_dir, file_path, config_path);
        if (query_cmd->parsed()) {
            return cmd_query(index_dir, query, top, explain, answer, config_path);
        }
        if (eval->parsed()) {
            return cmd_eval(index_dir, queries_path, ablation, report_path, config_path);
        }
        if (gen->parsed()) {
            return cmd_gen_queries(index_dir, per_sop, out_path, gen_mode, config_path);
        }
        if (serve->parsed()) return cmd_serve(index_dir, port, config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace soprag
