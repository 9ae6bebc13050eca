// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lookback/error.hpp"

namespace lookback {

namespace {

std::vector<TokenId> by_rank(const ProbDist& p) {
    std::vector<TokenId> ids(p.size());
    std::iota(ids.begin(), ids.end(), TokenId{0});
    std::stable_sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) { return p[a] > p[b]; });
    return ids;
}

std::vector<TokenId> take_until_mass(const ProbDist& p, std::span<const TokenId> order, double target) {
    if (target >= 1.0) return {order.begin(), order.end()};
    std::vector<TokenId> kept;
    double mass = 0.0;
    for (auto id : order) {
        kept.push_back(id);
        mass += p[id];
        if (mass >= target - kMassSlack) break;
    }
    return kept;
}

}  // namespace

std::vector<TokenId> nucleus_keep(const ProbDist& p, double top_p) {
    if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidArgument("nucleus top_p must be in (0, 1]");
    auto order = by_rank(p);
    return take_until_mass(p, order, top_p);
}

std::vector<TokenId> typical_keep(const ProbDist& p, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("typical tau must be in (0, 1]");
    const double h = dist_entropy(p);
    std::vector<double> deviation(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) deviation[i] = std::abs(-std::log(p[i]) - h);
    std::vector<TokenId> order(p.size());
    std::iota(order.begin(), order.end(), TokenId{0});
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return deviation[a] < deviation[b]; });
    return take_until_mass(p, order, tau);
}

double eta_threshold(const ProbDist& p, double eta) {
    return std::min(eta, std::sqrt(eta) * std::exp(-dist_entropy(p)));
}

std::vector<TokenId> eta_keep(const ProbDist& p, double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be > 0");
    const double theta = eta_threshold(p, eta);
    std::vector<TokenId> kept;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] >= theta) kept.push_back(static_cast<TokenId>(i));
    }
    if (kept.empty()) kept.push_back(p.argmax());
    return kept;
}

ProbDist restrict_to(const ProbDist& p, std::span<const TokenId> kept) {
    std::vector<double> masked(p.size(), 0.0);
    for (auto id : kept) masked[id] = p[id];
    return dist_normalize(masked);
}

ProbDist truncate_nucleus(const ProbDist& p, double top_p) { return restrict_to(p, nucleus_keep(p, top_p)); }
ProbDist truncate_typical(const ProbDist& p, double tau) { return restrict_to(p, typical_keep(p, tau)); }
ProbDist truncate_eta(const ProbDist& p, double eta) { return restrict_to(p, eta_keep(p, eta)); }

std::vector<double> softmax_neg(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("softmax over an empty list");
    double lo = std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) {
            throw InvalidArgument("softmax input must be finite or +inf");
        }
        lo = std::min(lo, v);
    }
    std::vector<double> out(values.size());
    if (std::isinf(lo)) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(values.size()));
        return out;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::isinf(values[i]) ? 0.0 : std::exp(-(values[i] - lo));
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
    if (weights.empty()) throw InvalidArgument("sampling from an empty candidate list");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const double u = rng.uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return i;
    }
    // Rounding left u at the very top; return the last nonzero weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

}  // namespace lookback
