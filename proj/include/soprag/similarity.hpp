#pragma once

#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace soprag {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector& other) const = default;
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double l2_norm(const EmbeddingVector& v);

/// Cosine similarity clamped at zero so "no overlap" scores 0 and all
/// downstream aggregation stays in [0,1].
double clamped_cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class SimilarityProvider {
public:
    virtual ~SimilarityProvider() = default;

    virtual std::string mode() const = 0;
    virtual std::size_t dim() const = 0;

    /// Unit-norm embedding of non-empty text. Throws Error on empty input
    /// (after trimming) and BackendError on remote failure.
    virtual EmbeddingVector embed(const std::string& text) const = 0;

    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const;

    /// sim(a, b) = max(0, cos(embed(a), embed(b))), in [0, 1].
    double sim(const std::string& a, const std::string& b) const;
};

/// Deterministic offline embedder: character trigrams of the lowercased,
/// trimmed text are hashed (FNV-1a 64) into `dim` buckets with signed
/// counts, then L2-normalized. Texts shorter than three characters hash
/// as a single gram.
class HashEmbedder final : public SimilarityProvider {
public:
    explicit HashEmbedder(std::size_t dim = 256);

    std::string mode() const override { return "hash"; }
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) const override;

private:
    std::size_t dim_;
};

/// OpenAI-compatible embeddings endpoint: POST {endpoint}/v1/embeddings with
/// {"model": ..., "input": [texts]}. Responses are L2-normalized. Results are
/// cached by exact text; at most `concurrency_cap` requests are in flight.
class RemoteEmbedder final : public SimilarityProvider {
public:
    RemoteEmbedder(std::string endpoint,
                   std::string model,
                   std::string api_key,
                   std::size_t expected_dim = 0,
                   int max_retries = 3,
                   int concurrency_cap = 8);

    std::string mode() const override { return "remote"; }
    std::size_t dim() const override;
    EmbeddingVector embed(const std::string& text) const override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;

private:
    std::vector<EmbeddingVector> request_embeddings(const std::vector<std::string>& inputs) const;

    std::string endpoint_;
    std::string model_;
    std::string api_key_;
    int max_retries_;
    int concurrency_cap_;

    mutable std::shared_mutex cache_mutex_;
    mutable std::unordered_map<std::string, EmbeddingVector> cache_;
    mutable std::mutex inflight_mutex_;
    mutable std::condition_variable_any inflight_cv_;
    mutable int inflight_ = 0;
    mutable std::size_t dim_ = 0;
};

} // namespace soprag
