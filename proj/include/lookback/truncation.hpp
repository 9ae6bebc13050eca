// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Truncation rules for sampling decoders. Each `*_keep` function returns the
// kept token ids; the matching `truncate_*` renormalizes the distribution over
// that set (dropped entries end up at the probability floor).
//
// Cumulative-mass comparisons allow kMassSlack.

#include <span>
#include <vector>

#include "lookback/core.hpp"
#include "lookback/rng.hpp"

namespace lookback {

inline constexpr double kMassSlack = 1e-12;

// Smallest most-probable set whose mass reaches top_p, in rank order.
std::vector<TokenId> nucleus_keep(const ProbDist& p, double top_p);
// Tokens ranked by |-ln p_v - H(p)|, ties by id, until the mass reaches tau.
std::vector<TokenId> typical_keep(const ProbDist& p, double tau);
// Tokens with p_v >= min(eta, sqrt(eta) exp(-H(p))); the argmax when none is.
std::vector<TokenId> eta_keep(const ProbDist& p, double eta);

double eta_threshold(const ProbDist& p, double eta);

ProbDist restrict_to(const ProbDist& p, std::span<const TokenId> kept);

ProbDist truncate_nucleus(const ProbDist& p, double top_p);
ProbDist truncate_typical(const ProbDist& p, double tau);
ProbDist truncate_eta(const ProbDist& p, double eta);

// p_i = exp(-v_i) / sum_j exp(-v_j), shifted by the minimum for stability.
// +inf entries get zero weight; all-infinite input gives the uniform vector.
std::vector<double> softmax_neg(std::span<const double> values);

// Inverse-CDF draw over `weights` (not necessarily normalized) listed in
// ascending id order. Returns the chosen index into the list.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

}  // namespace lookback
