// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lookback/core.hpp"
#include "lookback/divergence.hpp"
#include "lookback/lm.hpp"

namespace lookback {

enum class Algorithm { greedy, nucleus, typical, eta, contrastive, lookback };
enum class LookbackMode { uniform, softmax };

std::string_view to_string(Algorithm a);
std::string_view to_string(LookbackMode m);
Algorithm parse_algorithm(std::string_view name);
LookbackMode parse_lookback_mode(std::string_view name);

struct DecodeConfig {
    Algorithm algorithm = Algorithm::greedy;
    int max_new_tokens = 256;
    std::uint64_t seed = 0;

    double top_p = 0.95;   // nucleus
    double tau = 0.92;     // typical
    double eta = 0.0003;   // eta-sampling

    int contrastive_k = 5;
    double contrastive_alpha = 0.6;

    int lookback_k = 5;
    double lookback_alpha = 1.0;
    LookbackMode lookback_mode = LookbackMode::softmax;
    // Minimise the history KL over prefix positions as well as generated steps.
    bool history_includes_prefix = true;

    // Compute KL signals for decoders that do not need them. Look-back always
    // tracks them.
    bool track_signals = true;
    // Top entries of each step distribution kept in the record.
    int summary_top = 5;

    // Throws InvalidArgument on out-of-range parameters.
    void validate() const;
};

struct Candidate {
    TokenId id;
    double prob;
    std::optional<double> lookahead_kl;  // softmax mode only
};

struct StepRecord {
    TokenId token = 0;
    double entropy = 0.0;
    std::vector<TokenProb> top;
    StepSignals signals;
    // Filled only when the repetition alarm fired, in rank order.
    std::vector<Candidate> candidates;
};

struct GenerationRecord {
    TokenSeq prefix;
    TokenSeq continuation;  // ends at <eot> or after max_new_tokens
    std::vector<StepRecord> steps;
    DecodeConfig config;
    std::string backend;
    // Full step distributions; kept in memory only, never serialized.
    std::vector<ProbDist> step_dists;
};

GenerationRecord decode_greedy(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg);
// Nucleus, typical or eta sampling, chosen by cfg.algorithm.
GenerationRecord decode_sampling(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg);
// Contrastive search: argmax over the top-k of
//   (1 - a) p(v) - a * max_j cos(rep(x + v), rep(x_<=j)).
GenerationRecord decode_contrastive(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg);
// Look-back decoding. Emits the argmax until the history min-KL drops to
// alpha or below, then samples from the top-k either uniformly or by
// softmax(-lookahead prefix KL).
GenerationRecord decode_lookback(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg);

// Dispatches on cfg.algorithm.
GenerationRecord decode(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg);

// Continuation with a trailing <eot> removed; what the metrics see.
TokenSeq evaluated_tokens(const GenerationRecord& record);

nlohmann::json config_to_json(const DecodeConfig& cfg);
DecodeConfig config_from_json(const nlohmann::json& j);

// One JSONL line (schema lookback.generation/1). Infinite KL values are
// written as null.
nlohmann::json record_to_json(const GenerationRecord& record, const Vocabulary& vocab);
GenerationRecord record_from_json(const nlohmann::json& j);

// Rebuilds the in-memory step distributions of a deserialized record.
void recompute_step_dists(const ConditionalLM& lm, GenerationRecord& record);

}  // namespace lookback
