#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mar::retrieval {

template <typename Scalar = double>
using Embedding = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// One embedding per row.
template <typename Scalar = double>
using EmbeddingMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kFallbackDim = 64;

std::uint64_t fnv1a64(std::string_view bytes);

// Lowercased tokens split on anything that is not an ASCII letter or digit.
// Bytes >= 0x80 count as token characters so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

// Hashed bag of words: FNV-1a-64 of each token, bucket = hash mod 64, L2 normalized.
// Empty token set gives the zero vector.
Embedding<double> fallback_embed(std::string_view text);

// Cosine of the angle between u and v; 0 when either has zero norm.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u,
                                            const Eigen::MatrixBase<DerivedB>& v);

// Text encoder f(.). Implementations must be safe for concurrent calls.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string name() const = 0;
    // Rows are embeddings in input order.
    virtual EmbeddingMatrix<double> embed(const std::vector<std::string>& texts) const = 0;
};

class FallbackEmbedder final : public Embedder {
public:
    std::string name() const override { return "fallback-fnv1a-64"; }
    EmbeddingMatrix<double> embed(const std::vector<std::string>& texts) const override;
};

// Client for the embedding sidecar: POST {base}/embed, GET {base}/health.
class HttpEmbedder final : public Embedder {
public:
    static constexpr std::size_t kBatchCap = 256;

    explicit HttpEmbedder(std::string base_url, int timeout_seconds = 30);

    std::string name() const override;
    EmbeddingMatrix<double> embed(const std::vector<std::string>& texts) const override;

    // True when /health answers 200 with status "ok".
    bool healthy() const;

private:
    std::string base_url_;
    int timeout_seconds_;
};

// `fallback` or `http:<base-url>`. With allow_fallback, an unreachable sidecar
// degrades to the fallback embedder; otherwise EmbedderUnavailable is thrown.
std::shared_ptr<const Embedder> make_embedder(const std::string& spec, bool allow_fallback);

}  // namespace mar::retrieval

#include "mar/retrieval/embedding_impl.hpp"
