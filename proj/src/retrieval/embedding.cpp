#include "mar/retrieval/embedding.hpp"

#include "mar/core/error.hpp"
#include "mar/core/url.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cctype>

namespace mar::retrieval {

namespace {

bool is_token_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (is_token_byte(c)) {
            cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

Embedding<double> fallback_embed(std::string_view text) {
    Embedding<double> v = Embedding<double>::Zero(kFallbackDim);
    for (const auto& tok : tokenize(text)) v[static_cast<Eigen::Index>(fnv1a64(tok) % kFallbackDim)] += 1.0;
    const double n = v.norm();
    if (n > 0) v /= n;
    return v;
}

EmbeddingMatrix<double> FallbackEmbedder::embed(const std::vector<std::string>& texts) const {
    EmbeddingMatrix<double> out(static_cast<Eigen::Index>(texts.size()), kFallbackDim);
    for (std::size_t i = 0; i < texts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = fallback_embed(texts[i]).transpose();
    return out;
}

HttpEmbedder::HttpEmbedder(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

std::string HttpEmbedder::name() const { return "http:" + base_url_; }

bool HttpEmbedder::healthy() const {
    const auto ep = HttpEndpoint::parse(base_url_);
    httplib::Client cli(ep.origin);
    cli.set_connection_timeout(timeout_seconds_);
    cli.set_read_timeout(timeout_seconds_);
    auto res = cli.Get(ep.at("/health"));
    if (!res || res->status != 200) return false;
    try {
        return nlohmann::json::parse(res->body).value("status", "") == "ok";
    } catch (const nlohmann::json::exception&) {
        return false;
    }
}

EmbeddingMatrix<double> HttpEmbedder::embed(const std::vector<std::string>& texts) const {
    const auto ep = HttpEndpoint::parse(base_url_);
    httplib::Client cli(ep.origin);
    cli.set_connection_timeout(timeout_seconds_);
    cli.set_read_timeout(timeout_seconds_);

    std::vector<std::vector<double>> rows;
    rows.reserve(texts.size());
    std::size_t dim = 0;
    for (std::size_t begin = 0; begin < texts.size() || (texts.empty() && begin == 0); begin += kBatchCap) {
        const std::size_t end = std::min(texts.size(), begin + kBatchCap);
        nlohmann::json req = {{"texts", std::vector<std::string>(texts.begin() + begin, texts.begin() + end)}};
        auto res = cli.Post(ep.at("/embed"), req.dump(), "application/json");
        if (!res) throw EmbedderUnavailable("embedder at " + base_url_ + " unreachable");
        if (res->status != 200)
            throw EmbedderUnavailable("embedder at " + base_url_ + " answered HTTP " + std::to_string(res->status));
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw EmbedderUnavailable(std::string("embedder returned malformed JSON: ") + e.what());
        }
        const auto& vectors = body.at("vectors");
        if (vectors.size() != end - begin)
            throw EmbedderUnavailable("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                                      std::to_string(end - begin) + " texts");
        for (const auto& v : vectors) {
            auto row = v.get<std::vector<double>>();
            if (dim == 0) dim = row.size();
            if (row.size() != dim) throw DimensionMismatch("embedder returned vectors of unequal length");
            rows.push_back(std::move(row));
        }
        if (texts.empty()) break;
    }
    EmbeddingMatrix<double> out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return out;
}

std::shared_ptr<const Embedder> make_embedder(const std::string& spec, bool allow_fallback) {
    if (spec.empty() || spec == "fallback") return std::make_shared<FallbackEmbedder>();
    if (spec.rfind("http:", 0) == 0) {
        auto remote = std::make_shared<HttpEmbedder>(spec.substr(5));
        if (remote->healthy()) return remote;
        if (allow_fallback) return std::make_shared<FallbackEmbedder>();
        throw EmbedderUnavailable("embedder " + spec + " is not reachable and fallback is disabled");
    }
    throw Error("unknown embedder spec '" + spec + "' (expected 'fallback' or 'http:<url>')");
}

}  // namespace mar::retrieval
