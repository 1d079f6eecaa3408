#include "soprag/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>

#include "soprag/error.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/text.hpp"

namespace soprag {

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error("embedding dimension mismatch: " + std::to_string(a.dim()) + " vs "
                    + std::to_string(b.dim()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
    return acc;
}

double l2_norm(const EmbeddingVector& v) {
    double acc = 0.0;
    for (double x : v.values) acc += x * x;
    return std::sqrt(acc);
}

double clamped_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    return std::max(0.0, dot(a, b));
}

std::vector<EmbeddingVector> SimilarityProvider::embed_batch(
    const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

double SimilarityProvider::sim(const std::string& a, const std::string& b) const {
    return clamped_cosine(embed(a), embed(b));
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("hash embedder dimension must be positive");
}

EmbeddingVector HashEmbedder::embed(const std::string& text) const {
    std::string prep = text::to_lower(text::trim(text));
    if (prep.empty()) throw Error("cannot embed empty text");

    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    auto add_gram = [&](std::string_view gram) {
        std::uint64_t h = text::fnv1a64(gram);
        std::size_t bucket = static_cast<std::size_t>(h % dim_);
        double sign = ((h >> 32) & 1ULL) != 0 ? 1.0 : -1.0;
        v.values[bucket] += sign;
    };
    if (prep.size() < 3) {
        add_gram(prep);
    } else {
        for (std::size_t i = 0; i + 3 <= prep.size(); ++i) {
            add_gram(std::string_view(prep).substr(i, 3));
        }
    }

    double norm = l2_norm(v);
    if (norm == 0.0) {
        // Signed counts cancelled everywhere; fall back to a single
        // deterministic bucket so the unit-norm invariant still holds.
        v.values.assign(dim_, 0.0);
        v.values[static_cast<std::size_t>(text::fnv1a64(prep) % dim_)] = 1.0;
        return v;
    }
    for (double& x : v.values) x /= norm;
    return v;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model, std::string api_key,
                               std::size_t expected_dim, int max_retries, int concurrency_cap)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      max_retries_(max_retries),
      concurrency_cap_(std::max(1, concurrency_cap)),
      dim_(expected_dim) {
    if (endpoint_.empty() || model_.empty()) {
        throw ConfigError("remote embedding mode requires endpoint and model");
    }
}

std::size_t RemoteEmbedder::dim() const {
    std::shared_lock lock(cache_mutex_);
    return dim_;
}

std::vector<EmbeddingVector> RemoteEmbedder::request_embeddings(
    const std::vector<std::string>& inputs) const {
    {
        std::unique_lock lock(inflight_mutex_);
        inflight_cv_.wait(lock, [&] { return inflight_ < concurrency_cap_; });
        ++inflight_;
    }
    std::vector<std::vector<double>> raw;
    try {
        HttpEmbeddingsClient client(endpoint_, model_, api_key_, max_retries_);
        raw = client.embed(inputs);
    } catch (...) {
        {
            std::unique_lock lock(inflight_mutex_);
            --inflight_;
        }
        inflight_cv_.notify_one();
        throw;
    }
    {
        std::unique_lock lock(inflight_mutex_);
        --inflight_;
    }
    inflight_cv_.notify_one();

    std::vector<EmbeddingVector> out;
    out.reserve(raw.size());
    for (auto& values : raw) {
        EmbeddingVector v{std::move(values)};
        double norm = l2_norm(v);
        if (norm == 0.0) throw BackendError("remote embedding has zero norm");
        for (double& x : v.values) x /= norm;
        out.push_back(std::move(v));
    }

    std::unique_lock lock(cache_mutex_);
    for (const auto& v : out) {
        if (dim_ == 0) {
            dim_ = v.dim();
        } else if (v.dim() != dim_) {
            throw ConfigError("remote embedding dimension " + std::to_string(v.dim())
                              + " does not match expected " + std::to_string(dim_));
        }
    }
    return out;
}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) const {
    if (text::trim(text).empty()) throw Error("cannot embed empty text");
    {
        std::shared_lock lock(cache_mutex_);
        auto it = cache_.find(text);
        if (it != cache_.end()) return it->second;
    }
    EmbeddingVector v = request_embeddings({text}).at(0);
    {
        std::unique_lock lock(cache_mutex_);
        auto [it, inserted] = cache_.emplace(text, v);
        if (!inserted) return it->second; // first writer wins
    }
    return v;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(
    const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::string> missing;
    std::vector<std::size_t> missing_idx;
    {
        std::shared_lock lock(cache_mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (text::trim(texts[i]).empty()) throw Error("cannot embed empty text");
            auto it = cache_.find(texts[i]);
            if (it != cache_.end()) {
                out[i] = it->second;
            } else {
                missing.push_back(texts[i]);
                missing_idx.push_back(i);
            }
        }
    }
    if (!missing.empty()) {
        std::vector<EmbeddingVector> fetched = request_embeddings(missing);
        std::unique_lock lock(cache_mutex_);
        for (std::size_t j = 0; j < missing.size(); ++j) {
            auto [it, inserted] = cache_.emplace(missing[j], fetched[j]);
            out[missing_idx[j]] = it->second;
        }
    }
    return out;
}

} // namespace soprag
