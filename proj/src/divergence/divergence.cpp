// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/divergence.hpp"

#include <algorithm>
#include <cmath>

#include "lookback/error.hpp"

namespace lookback {

double kl_divergence(const ProbDist& p, const ProbDist& q) {
    if (p.size() != q.size()) {
        throw InvalidArgument("KL divergence of distributions with sizes " + std::to_string(p.size()) + " and " +
                              std::to_string(q.size()));
    }
    double kl = 0.0;
    const auto pp = p.probs();
    const auto qq = q.probs();
    for (std::size_t i = 0; i < pp.size(); ++i) {
        if (pp[i] != qq[i]) kl += pp[i] * std::log(pp[i] / std::max(qq[i], ProbDist::floor));
    }
    return std::max(kl, 0.0);
}

DistHistory::DistHistory(std::vector<ProbDist> prefix_dists, std::size_t first_position, bool history_includes_prefix)
    : prefix_(std::move(prefix_dists)), first_position_(first_position), includes_prefix_(history_includes_prefix) {}

DistHistory DistHistory::for_prefix(const ConditionalLM& lm, std::span<const TokenId> prefix,
                                    bool history_includes_prefix) {
    const std::size_t first = lm.accepts_empty_context() ? 0 : 1;
    std::vector<ProbDist> dists;
    for (std::size_t j = first; j < prefix.size(); ++j) dists.push_back(lm.next_dist(prefix.first(j)));
    return DistHistory(std::move(dists), first, history_includes_prefix);
}

namespace {

void scan_min(const ProbDist& current, std::span<const ProbDist> dists, std::size_t first_position, MinKL& best) {
    for (std::size_t i = 0; i < dists.size(); ++i) {
        double kl = kl_divergence(current, dists[i]);
        if (!best.position || kl < best.value) {
            best.value = kl;
            best.position = first_position + i;
        }
    }
}

}  // namespace

MinKL min_kl_history(const ProbDist& current, const DistHistory& history) {
    MinKL best;
    if (history.includes_prefix()) scan_min(current, history.prefix(), history.first_position(), best);
    scan_min(current, history.generated(), history.generated_position(), best);
    return best;
}

double min_kl_prefix(const ProbDist& current, const DistHistory& history) {
    MinKL best;
    scan_min(current, history.prefix(), history.first_position(), best);
    return best.value;
}

double lookahead_prefix_kl(const ConditionalLM& lm, std::span<const TokenId> context, TokenId candidate,
                           const DistHistory& history) {
    if (candidate >= lm.vocab().size()) throw InvalidArgument("lookahead candidate outside vocabulary");
    TokenSeq extended(context.begin(), context.end());
    extended.push_back(candidate);
    return min_kl_prefix(lm.next_dist(extended), history);
}

std::vector<std::vector<double>> pairwise_kl_matrix(std::span<const ProbDist> dists) {
    std::vector<std::vector<double>> m(dists.size(), std::vector<double>(dists.size(), 0.0));
    for (std::size_t i = 0; i < dists.size(); ++i) {
        for (std::size_t j = 0; j < dists.size(); ++j) {
            if (i != j) m[i][j] = kl_divergence(dists[i], dists[j]);
        }
    }
    return m;
}

StepSignals compute_signals(const ProbDist& current, const DistHistory& history, double alpha) {
    StepSignals s;
    auto h = min_kl_history(current, history);
    s.kl_min_history = h.value;
    s.argmin_history = h.position;
    s.kl_min_prefix = min_kl_prefix(current, history);
    s.alarm = h.position.has_value() && h.value <= alpha;
    return s;
}

SignalTrace trace_signals(const ConditionalLM& lm, std::span<const TokenId> prefix,
                          std::span<const TokenId> continuation, double alpha, bool history_includes_prefix) {
    auto history = DistHistory::for_prefix(lm, prefix, history_includes_prefix);
    SignalTrace trace;
    TokenSeq context(prefix.begin(), prefix.end());
    for (auto token : continuation) {
        auto current = lm.next_dist(context);
        trace.signals.push_back(compute_signals(current, history, alpha));
        history.append(current);
        trace.dists.push_back(std::move(current));
        context.push_back(token);
    }
    return trace;
}

}  // namespace lookback
