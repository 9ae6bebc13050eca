// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lookback/lm.hpp"

namespace lookback {

struct NGramParams {
    int order = 3;
    double add_k = 0.1;
    // One weight per order, unigram first. Empty means uniform.
    std::vector<double> lambdas;
};

// Interpolated add-k n-gram model:
//
//   P(v | ctx) = sum_o lambda_o * (c_o(ctx_o, v) + k) / (c_o(ctx_o) + k |V|)
//
// where ctx_o is the last o-1 tokens of ctx. Orders whose context is longer
// than the available history are left out and the remaining weights are
// rescaled; if those weights are all zero the longest usable order alone is
// used. Each training line is followed by `<eot>`.
class NGramModel final : public ConditionalLM {
public:
    struct CountTable {
        std::uint64_t total = 0;
        std::map<TokenId, std::uint64_t> counts;

        bool operator==(const CountTable&) const = default;
    };
    // Context (exactly o-1 ids for order o) -> continuation counts.
    using OrderTable = std::map<TokenSeq, CountTable>;

    static NGramModel train(Vocabulary vocab, std::span<const TokenSeq> lines, const NGramParams& params);
    // Builds the vocabulary from the corpus itself.
    static NGramModel train_text(std::span<const std::string> lines, const NGramParams& params);

    // Binary container, see docs/formats.md. Throws FormatError with the byte
    // offset on malformed input.
    void save(const std::filesystem::path& path) const;
    static NGramModel load(const std::filesystem::path& path);
    std::string serialize() const;
    static NGramModel deserialize(std::string_view bytes);

    const Vocabulary& vocab() const override { return vocab_; }
    ProbDist next_dist(std::span<const TokenId> context) const override;
    // One-hot of the last context token followed by the L2-normalized
    // next-token distribution.
    std::optional<std::vector<double>> representation(std::span<const TokenId> context) const override;
    std::string backend_id() const override;

    int order() const noexcept { return order_; }
    double add_k() const noexcept { return add_k_; }
    std::span<const double> lambdas() const noexcept { return lambdas_; }
    const OrderTable& table(int order) const { return tables_.at(static_cast<std::size_t>(order - 1)); }

    bool operator==(const NGramModel& other) const {
        return order_ == other.order_ && add_k_ == other.add_k_ && lambdas_ == other.lambdas_ &&
               vocab_ == other.vocab_ && tables_ == other.tables_;
    }

private:
    NGramModel() = default;

    static void validate_params(const NGramParams& params, std::vector<double>& lambdas);

    Vocabulary vocab_;
    int order_ = 1;
    double add_k_ = 0.1;
    std::vector<double> lambdas_;
    std::vector<OrderTable> tables_;
};

}  // namespace lookback
