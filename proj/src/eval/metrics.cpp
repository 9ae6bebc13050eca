// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "../lm/http_json.hpp"
#include "lookback/error.hpp"
#include "lookback/eval.hpp"

namespace lookback {

namespace {

struct SpanHash {
    std::size_t operator()(std::span<const TokenId> s) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (auto id : s) h = (h ^ id) * 1099511628211ull;
        return h;
    }
};

struct SpanEq {
    bool operator()(std::span<const TokenId> a, std::span<const TokenId> b) const noexcept {
        return std::equal(a.begin(), a.end(), b.begin(), b.end());
    }
};

}  // namespace

double rep_n(std::span<const TokenId> tokens, int n) {
    if (n < 1) throw InvalidArgument("rep-n needs n >= 1");
    const auto len = static_cast<std::size_t>(n);
    if (tokens.size() < len) return 0.0;
    const std::size_t total = tokens.size() - len + 1;
    std::unordered_set<std::span<const TokenId>, SpanHash, SpanEq> unique;
    unique.reserve(total);
    for (std::size_t i = 0; i < total; ++i) unique.insert(tokens.subspan(i, len));
    return 1.0 - static_cast<double>(unique.size()) / static_cast<double>(total);
}

double diversity_from_reps(double rep2, double rep3, double rep4) {
    return (1.0 - rep2) * (1.0 - rep3) * (1.0 - rep4);
}

double diversity(std::span<const TokenId> tokens) {
    return diversity_from_reps(rep_n(tokens, 2), rep_n(tokens, 3), rep_n(tokens, 4));
}

TfidfEmbedder TfidfEmbedder::fit(std::span<const TokenSeq> documents, std::size_t vocab_size) {
    std::vector<std::size_t> df(vocab_size, 0);
    std::vector<TokenId> seen;
    for (const auto& doc : documents) {
        seen.assign(doc.begin(), doc.end());
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto id : seen) {
            if (id >= vocab_size) throw InvalidArgument("TF-IDF document token outside vocabulary");
            ++df[id];
        }
    }
    TfidfEmbedder e;
    e.num_documents_ = documents.size();
    e.idf_.resize(vocab_size);
    const double n = static_cast<double>(documents.size());
    for (std::size_t i = 0; i < vocab_size; ++i) {
        e.idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
    }
    return e;
}

std::vector<double> TfidfEmbedder::embed(std::span<const TokenId> tokens) const {
    std::vector<double> v(idf_.size(), 0.0);
    for (auto id : tokens) {
        if (id >= idf_.size()) throw InvalidArgument("TF-IDF token outside vocabulary");
        v[id] += 1.0;
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] *= idf_[i];
        norm += v[i] * v[i];
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::size_t dimension, std::chrono::milliseconds timeout,
                               int retries)
    : endpoint_(std::move(endpoint)), dimension_(dimension), timeout_(timeout), retries_(retries) {
    if (dimension_ == 0) throw InvalidArgument("embedding dimension must be positive");
    detail::parse_endpoint(endpoint_);
}

std::vector<double> RemoteEmbedder::embed(std::span<const TokenId> tokens) const {
    nlohmann::json body;
    body["tokens"] = std::vector<TokenId>(tokens.begin(), tokens.end());
    auto reply = detail::post_json(endpoint_, body, timeout_, retries_);
    std::vector<double> v;
    try {
        v = reply.at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(endpoint_ + ": malformed embedding reply: " + e.what(), false);
    }
    if (v.size() != dimension_) {
        throw BackendError(endpoint_ + ": embedding has dimension " + std::to_string(v.size()) + ", expected " +
                               std::to_string(dimension_),
                           false);
    }
    return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("cosine of vectors with different dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("degenerate embedding");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double coherence(std::span<const TokenId> prefix, std::span<const TokenId> continuation, const Embedder& embedder) {
    if (prefix.empty() || continuation.empty()) throw InvalidArgument("coherence needs nonempty texts");
    auto a = embedder.embed(prefix);
    auto b = embedder.embed(continuation);
    return cosine_similarity(a, b);
}

}  // namespace lookback
