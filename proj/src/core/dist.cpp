// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "lookback/core.hpp"
#include "lookback/error.hpp"

namespace lookback {

ProbDist ProbDist::uniform(std::size_t size) {
    if (size == 0) throw InvalidArgument("uniform distribution over empty support");
    std::vector<double> ones(size, 1.0);
    return dist_normalize(ones);
}

TokenId ProbDist::argmax() const noexcept {
    auto it = std::max_element(probs_.begin(), probs_.end());
    return static_cast<TokenId>(it - probs_.begin());
}

ProbDist dist_normalize(std::span<const double> raw) {
    if (raw.empty()) throw InvalidArgument("degenerate distribution: empty vector");
    bool any_positive = false;
    for (double v : raw) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("distribution entries must be finite and >= 0");
        any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) throw InvalidArgument("degenerate distribution");

    // Entries that would land under the floor are pinned to it and the rest
    // share the remaining mass in proportion to their raw values.
    const std::size_t n = raw.size();
    std::vector<bool> pinned(n, false);
    std::size_t num_pinned = 0;
    double scale = 0.0;
    for (bool changed = true; changed;) {
        double free_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!pinned[i]) free_sum += raw[i];
        }
        scale = (1.0 - static_cast<double>(num_pinned) * ProbDist::floor) / free_sum;
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!pinned[i] && raw[i] * scale < ProbDist::floor) {
                pinned[i] = true;
                ++num_pinned;
                changed = true;
            }
        }
    }
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = pinned[i] ? ProbDist::floor : raw[i] * scale;
    return ProbDist(std::move(p));
}

double dist_entropy(const ProbDist& p) {
    double h = 0.0;
    for (double v : p.probs()) h -= v * std::log(v);
    return std::max(h, 0.0);
}

std::vector<TokenProb> dist_top_k(const ProbDist& p, std::size_t k) {
    if (k == 0 || k > p.size()) {
        throw InvalidArgument("top-k: k=" + std::to_string(k) + " outside [1, " + std::to_string(p.size()) + "]");
    }
    std::vector<TokenProb> all(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) all[i] = {static_cast<TokenId>(i), p[i]};
    auto by_rank = [](const TokenProb& a, const TokenProb& b) {
        return a.prob > b.prob || (a.prob == b.prob && a.id < b.id);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_rank);
    all.resize(k);
    return all;
}

}  // namespace lookback
