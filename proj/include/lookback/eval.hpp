// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lookback/core.hpp"

namespace lookback {

// 1 - |unique n-grams| / |n-grams| over contiguous n-grams. Sequences too
// short to hold an n-gram score 0.
double rep_n(std::span<const TokenId> tokens, int n);

// prod_{n=2..4} (1 - rep_n).
double diversity(std::span<const TokenId> tokens);
double diversity_from_reps(double rep2, double rep3, double rep4);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(std::span<const TokenId> tokens) const = 0;
};

// Bag-of-tokens TF-IDF with idf = ln((1 + N) / (1 + df)) + 1, L2-normalized.
// The empty sequence embeds to the zero vector.
class TfidfEmbedder final : public Embedder {
public:
    static TfidfEmbedder fit(std::span<const TokenSeq> documents, std::size_t vocab_size);

    std::size_t dimension() const override { return idf_.size(); }
    std::vector<double> embed(std::span<const TokenId> tokens) const override;
    double idf(TokenId id) const { return idf_.at(id); }
    std::size_t num_documents() const noexcept { return num_documents_; }

private:
    std::vector<double> idf_;
    std::size_t num_documents_ = 0;
};

// Embedding server client:
//   POST {"tokens": [ids]}  ->  {"embedding": [floats]}
class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(std::string endpoint, std::size_t dimension, std::chrono::milliseconds timeout = std::chrono::seconds(10),
                   int retries = 2);

    std::size_t dimension() const override { return dimension_; }
    std::vector<double> embed(std::span<const TokenId> tokens) const override;

private:
    std::string endpoint_;
    std::size_t dimension_;
    std::chrono::milliseconds timeout_;
    int retries_;
};

// Throws InvalidArgument("degenerate embedding") when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double coherence(std::span<const TokenId> prefix, std::span<const TokenId> continuation, const Embedder& embedder);

}  // namespace lookback
