// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Vocabulary, tokenization and probability-distribution primitives shared by
// every other part of the library. All types here are immutable once built.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lookback {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Bijection between token strings and dense ids. Ids 0 and 1 are always the
// reserved `<unk>` and `<eot>` tokens.
class Vocabulary {
public:
    static constexpr TokenId unk_id = 0;
    static constexpr TokenId eot_id = 1;
    static constexpr std::string_view unk_token = "<unk>";
    static constexpr std::string_view eot_token = "<eot>";

    // Reserved tokens only.
    Vocabulary();

    // Reserved tokens followed by `words` in first-appearance order. Duplicates
    // and reserved spellings are skipped.
    static Vocabulary build(std::span<const std::string> words);

    // Collects every whitespace-separated token of `lines` in first-appearance
    // order.
    static Vocabulary from_text(std::span<const std::string> lines);

    // One token per line, line number = id. Lines 0 and 1 must be `<unk>` and
    // `<eot>`.
    static Vocabulary load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::size_t size() const noexcept { return tokens_.size(); }
    std::optional<TokenId> find(std::string_view token) const;
    // Unknown strings map to `<unk>`.
    TokenId id(std::string_view token) const;
    const std::string& token(TokenId id) const;
    std::span<const std::string> tokens() const noexcept { return tokens_; }
    bool contains(TokenId id) const noexcept { return id < tokens_.size(); }

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    explicit Vocabulary(std::vector<std::string> tokens);

    std::vector<std::string> tokens_;
    std::map<std::string, TokenId, std::less<>> index_;
};

std::vector<std::string_view> split_whitespace(std::string_view text);

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab);
std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

// Throws InvalidArgument when an id is outside the vocabulary.
void check_tokens(std::span<const TokenId> ids, const Vocabulary& vocab);

// Full-support categorical distribution over a vocabulary: every entry is at
// least `floor` and the entries sum to one.
class ProbDist {
public:
    static constexpr double floor = 1e-12;

    static ProbDist uniform(std::size_t size);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const noexcept { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }
    // Lowest id among the maximal entries.
    TokenId argmax() const noexcept;

    bool operator==(const ProbDist& other) const = default;

private:
    friend ProbDist dist_normalize(std::span<const double> raw);
    explicit ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {}

    std::vector<double> probs_;
};

// Scales `raw` to sum to one with every entry at least ProbDist::floor:
// entries whose share would fall below the floor are set to it and the others
// split the remaining mass in proportion to their raw values. Idempotent.
// Throws InvalidArgument on negative/non-finite input and on an all-zero
// vector.
ProbDist dist_normalize(std::span<const double> raw);

// Shannon entropy in nats.
double dist_entropy(const ProbDist& p);

struct TokenProb {
    TokenId id;
    double prob;

    bool operator==(const TokenProb&) const = default;
};

// The k most probable tokens, by descending probability with ties broken by
// ascending id.
std::vector<TokenProb> dist_top_k(const ProbDist& p, std::size_t k);

}  // namespace lookback
