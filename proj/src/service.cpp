#include "soprag/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "soprag/error.hpp"
#include "soprag/generation.hpp"
#include "soprag/text.hpp"

namespace soprag {

using nlohmann::json;

struct QueryService::Impl {
    const KnowledgeBase& kb;
    const SimilarityProvider& provider;
    const Router& router;
    RetrievalConfig config;
    const ChatClient* chat;
    httplib::Server server;

    Impl(const KnowledgeBase& kb_in, const SimilarityProvider& provider_in,
         const Router& router_in, RetrievalConfig config_in, const ChatClient* chat_in)
        : kb(kb_in), provider(provider_in), router(router_in), config(config_in), chat(chat_in) {
        configure();
    }

    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    /// Returns the non-empty query string, or sets a 400 response.
    bool parse_query(const httplib::Request& req, httplib::Response& res, json& body_out) {
        std::string content_type = req.get_header_value("Content-Type");
        if (!content_type.empty() && content_type.find("application/json") == std::string::npos) {
            reply(res, 400, {{"error", "Content-Type must be application/json"}});
            return false;
        }
        try {
            body_out = json::parse(req.body);
        } catch (const json::exception& e) {
            reply(res, 400, {{"error", std::string("malformed JSON body: ") + e.what()}});
            return false;
        }
        if (!body_out.is_object() || !body_out.contains("query")
            || !body_out.at("query").is_string()
            || text::trim(body_out.at("query").get<std::string>()).empty()) {
            reply(res, 400, {{"error", "body must contain a non-empty \"query\" string"}});
            return false;
        }
        return true;
    }

    void configure() {
        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, {{"status", "ok"}});
        });

        server.Post("/v1/retrieve", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            if (!parse_query(req, res, body)) return;
            RetrievalConfig request_config = config;
            if (body.contains("top_k")) {
                if (!body.at("top_k").is_number_integer() || body.at("top_k").get<int>() < 1) {
                    reply(res, 400, {{"error", "\"top_k\" must be a positive integer"}});
                    return;
                }
                request_config.result_list_size = body.at("top_k").get<int>();
            }
            try {
                RetrievalOutput output =
                    retrieve(body.at("query").get<std::string>(), kb, provider, router,
                             request_config);
                json results = json::array();
                for (const auto& result : output.results) results.push_back(to_json(result));
                reply(res, 200,
                      {{"results", results},
                       {"weights",
                        {{"entity", output.effective_weights[0]},
                         {"causal", output.effective_weights[1]},
                         {"flow", output.effective_weights[2]}}}});
            } catch (const std::exception& e) {
                reply(res, 500, {{"error", e.what()}});
            }
        });

        server.Post("/v1/answer", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            if (!parse_query(req, res, body)) return;
            try {
                std::string query = body.at("query").get<std::string>();
                RetrievalOutput output = retrieve(query, kb, provider, router, config);
                if (output.results.empty()) {
                    reply(res, 500, {{"error", "no results"}});
                    return;
                }
                const RankedResult& top = output.results.front();
                const FlowGraph& flow = kb.flow_graphs.at(top.sop_id);
                json steps = json::array();
                json answer;
                if (!flow.steps.empty()) {
                    LinearizedProcedure linearized = linearize_flow(flow, top.title);
                    for (const auto& line : linearized.lines) steps.push_back(line);
                    answer = generate_answer(query, linearized, chat);
                } else {
                    answer = top.title;
                }
                reply(res, 200,
                      {{"sop_id", top.sop_id},
                       {"title", top.title},
                       {"steps", steps},
                       {"answer", answer}});
            } catch (const std::exception& e) {
                reply(res, 500, {{"error", e.what()}});
            }
        });
    }
};

QueryService::QueryService(const KnowledgeBase& kb, const SimilarityProvider& provider,
                           const Router& router, RetrievalConfig config, const ChatClient* chat)
    : impl_(std::make_unique<Impl>(kb, provider, router, config, chat)) {}

QueryService::~QueryService() {
    stop();
}

int QueryService::start(int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port("0.0.0.0");
    } else {
        if (!impl_->server.bind_to_port("0.0.0.0", port)) {
            throw Error("cannot bind port " + std::to_string(port));
        }
        port_ = port;
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void QueryService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

int QueryService::run_blocking(int port) {
    if (!impl_->server.bind_to_port("0.0.0.0", port)) {
        throw Error("cannot bind port " + std::to_string(port));
    }
    port_ = port;
    impl_->server.listen_after_bind();
    return 0;
}

} // namespace soprag
