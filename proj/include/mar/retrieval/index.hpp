#pragma once

#include "mar/retrieval/documents.hpp"
#include "mar/retrieval/embedding.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace mar::retrieval {

// Scores closer than this are treated as ties and ordered by ascending id.
inline constexpr double kTieTolerance = 1e-9;

// Orders candidates by descending score, ties by ascending id, and keeps the first k.
// Returns positions into `scores`.
template <typename Scalar>
std::vector<std::size_t> rank_top_k(const Embedding<Scalar>& scores, const std::vector<int>& ids, std::size_t k) {
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids[a] < ids[b];
    });
    // Regroup near-equal runs, anchored at each run's leading score.
    for (std::size_t begin = 0; begin < order.size();) {
        std::size_t end = begin + 1;
        while (end < order.size() && scores[order[begin]] - scores[order[end]] <= kTieTolerance) ++end;
        std::sort(order.begin() + begin, order.begin() + end,
                  [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
        begin = end;
    }
    order.resize(std::min(k, order.size()));
    return order;
}

// Immutable exact-scan cosine index over one document collection.
template <typename Doc, typename Scalar = double>
class DocumentIndex {
public:
    DocumentIndex() = default;

    // Embeds each document's index text (instruction or subtask) with `embedder`.
    DocumentIndex(std::vector<Doc> docs, std::shared_ptr<const Embedder> embedder)
        : docs_(std::move(docs)), embedder_(std::move(embedder)) {
        ids_.reserve(docs_.size());
        std::vector<std::string> texts;
        texts.reserve(docs_.size());
        for (const auto& d : docs_) {
            ids_.push_back(d.id);
            texts.push_back(index_text(d));
        }
        if (!docs_.empty()) {
            embeddings_ = embedder_->embed(texts).template cast<Scalar>();
            norms_ = embeddings_.rowwise().norm();
        }
    }

    const std::vector<Doc>& docs() const { return docs_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const EmbeddingMatrix<Scalar>& embeddings() const { return embeddings_; }
    const std::shared_ptr<const Embedder>& embedder() const { return embedder_; }

    Embedding<Scalar> embed_query(const std::string& query) const {
        EmbeddingMatrix<double> q = embedder_->embed({query});
        return q.row(0).transpose().template cast<Scalar>();
    }

    // Cosine similarity of the query against every document.
    Embedding<Scalar> scores(const Embedding<Scalar>& query) const {
        if (docs_.empty()) return Embedding<Scalar>();
        if (query.size() != embeddings_.cols())
            throw DimensionMismatch("query dim " + std::to_string(query.size()) + " vs index dim " +
                                    std::to_string(embeddings_.cols()));
        const Scalar qn = query.norm();
        Embedding<Scalar> dots = embeddings_ * query;
        Embedding<Scalar> out(dots.size());
        for (Eigen::Index i = 0; i < dots.size(); ++i) {
            const Scalar denom = norms_[i] * qn;
            out[i] = denom == Scalar(0) ? Scalar(0) : std::clamp(dots[i] / denom, Scalar(-1), Scalar(1));
        }
        return out;
    }

    std::vector<Doc> top_k(const std::string& query, std::size_t k) const {
        if (docs_.empty() || k == 0) return {};
        std::vector<Doc> out;
        for (std::size_t pos : rank_top_k<Scalar>(scores(embed_query(query)), ids_, k)) out.push_back(docs_[pos]);
        return out;
    }

private:
    std::vector<Doc> docs_;
    std::vector<int> ids_;
    std::shared_ptr<const Embedder> embedder_;
    EmbeddingMatrix<Scalar> embeddings_;
    Embedding<Scalar> norms_;
};

using ManagerKB = DocumentIndex<ManagerDoc>;
using OperatorLibrary = DocumentIndex<OperatorDoc>;

// App name -> that app's operator library. Keys are exact app names.
class OperatorKBRegistry {
public:
    OperatorKBRegistry() = default;

    // Throws InvalidKbEntry when a document's app differs from its library key
    // or a document id appears under two apps.
    void add(const std::string& app, OperatorLibrary library);

    const OperatorLibrary* find(const std::string& app) const;
    std::vector<std::string> apps() const;
    std::size_t total_docs() const;

private:
    std::map<std::string, OperatorLibrary> libraries_;
};

ManagerKB build_manager_index(std::vector<ManagerDoc> docs, std::shared_ptr<const Embedder> embedder);

// Groups docs by app field into one library each.
OperatorKBRegistry build_operator_registry(const std::vector<OperatorDoc>& docs,
                                           std::shared_ptr<const Embedder> embedder);

// Top min(k, |kb|) documents by cosine to the query instruction. k must be >= 1.
std::vector<ManagerDoc> manager_retrieve(const std::string& query, const ManagerKB& kb, int k);

// Best match inside the app's library only; nullopt when the app has no library or it is empty.
std::optional<OperatorDoc> operator_retrieve(const std::string& subtask_query, const std::string& app,
                                             const OperatorKBRegistry& registry);

}  // namespace mar::retrieval
