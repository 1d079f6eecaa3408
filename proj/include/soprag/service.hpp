#pragma once

#include <memory>
#include <thread>

#include "soprag/knowledge_base.hpp"
#include "soprag/retrieval.hpp"
#include "soprag/router.hpp"

namespace soprag {

class ChatClient;

/// Read-only HTTP query service over an immutable index.
///
///   POST /v1/retrieve  {"query": ..., "top_k"?: n}
///   POST /v1/answer    {"query": ...}
///   GET  /healthz
///
/// All endpoints exchange UTF-8 JSON; malformed or empty queries get 400,
/// internal failures 500. stop() drains in-flight requests.
class QueryService {
public:
    QueryService(const KnowledgeBase& kb, const SimilarityProvider& provider,
                 const Router& router, RetrievalConfig config,
                 const ChatClient* chat = nullptr);
    ~QueryService();

    QueryService(const QueryService&) = delete;
    QueryService& operator=(const QueryService&) = delete;

    /// Bind the given port (0 = any free port) and serve on a background
    /// thread. Returns the bound port.
    int start(int port);
    void stop();
    int port() const { return port_; }

    /// Serve on the calling thread until stop() is invoked from elsewhere
    /// (e.g. a signal handler).
    int run_blocking(int port);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace soprag
