// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// KL-divergence signals over decoding histories.
//
// Positions are numbered over the whole token sequence: the distribution at
// position i is p(. | x_0 .. x_{i-1}), so a prefix of length m owns positions
// 0..m-1 and generated step s sits at position m + s.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lookback/core.hpp"
#include "lookback/lm.hpp"

namespace lookback {

inline constexpr double kNoHistory = std::numeric_limits<double>::infinity();

// KL(p || q) in nats. Both arguments are already floored, so the result is
// finite. Throws InvalidArgument on a size mismatch.
double kl_divergence(const ProbDist& p, const ProbDist& q);

// Distributions seen so far in one generation: the fixed prefix distributions
// and an append-only list for generated steps.
class DistHistory {
public:
    // `first_position` is the position of prefix_dists[0]; it is 1 when the
    // backend could not score the empty context.
    DistHistory(std::vector<ProbDist> prefix_dists, std::size_t first_position, bool history_includes_prefix);

    // Scores every prefix position with `lm`.
    static DistHistory for_prefix(const ConditionalLM& lm, std::span<const TokenId> prefix,
                                  bool history_includes_prefix = true);

    void append(ProbDist dist) { generated_.push_back(std::move(dist)); }

    std::span<const ProbDist> prefix() const noexcept { return prefix_; }
    std::span<const ProbDist> generated() const noexcept { return generated_; }
    bool includes_prefix() const noexcept { return includes_prefix_; }
    std::size_t first_position() const noexcept { return first_position_; }
    // Position of generated()[0].
    std::size_t generated_position() const noexcept { return first_position_ + prefix_.size(); }

private:
    std::vector<ProbDist> prefix_;
    std::vector<ProbDist> generated_;
    std::size_t first_position_;
    bool includes_prefix_;
};

struct MinKL {
    double value = kNoHistory;
    std::optional<std::size_t> position;  // earliest minimiser
};

// min over previous steps of KL(current || step). Prefix positions take part
// when the history was built with history_includes_prefix. An empty history
// yields kNoHistory.
MinKL min_kl_history(const ProbDist& current, const DistHistory& history);

// min over prefix positions of KL(current || prefix); kNoHistory when the
// history holds no prefix distribution.
double min_kl_prefix(const ProbDist& current, const DistHistory& history);

// Prefix min-KL of the distribution that follows `context` + `candidate`.
// Does not touch `history`.
double lookahead_prefix_kl(const ConditionalLM& lm, std::span<const TokenId> context, TokenId candidate,
                           const DistHistory& history);

// M[i][j] = KL(dists[i] || dists[j]).
std::vector<std::vector<double>> pairwise_kl_matrix(std::span<const ProbDist> dists);

struct StepSignals {
    double kl_min_history = kNoHistory;
    std::optional<std::size_t> argmin_history;
    double kl_min_prefix = kNoHistory;
    bool alarm = false;
};

// Signals of `current` against `history`; alarm is kl_min_history <= alpha.
StepSignals compute_signals(const ProbDist& current, const DistHistory& history, double alpha);

struct SignalTrace {
    std::vector<StepSignals> signals;
    std::vector<ProbDist> dists;
};

// Teacher-forced signals of a fixed continuation, one entry per token.
SignalTrace trace_signals(const ConditionalLM& lm, std::span<const TokenId> prefix,
                          std::span<const TokenId> continuation, double alpha, bool history_includes_prefix = true);

}  // namespace lookback
