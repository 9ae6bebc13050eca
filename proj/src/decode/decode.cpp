// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lookback/error.hpp"
#include "lookback/rng.hpp"
#include "lookback/truncation.hpp"

namespace lookback {

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::greedy: return "greedy";
        case Algorithm::nucleus: return "nucleus";
        case Algorithm::typical: return "typical";
        case Algorithm::eta: return "eta";
        case Algorithm::contrastive: return "contrastive";
        case Algorithm::lookback: return "lookback";
    }
    return "unknown";
}

std::string_view to_string(LookbackMode m) { return m == LookbackMode::uniform ? "uniform" : "softmax"; }

Algorithm parse_algorithm(std::string_view name) {
    for (auto a : {Algorithm::greedy, Algorithm::nucleus, Algorithm::typical, Algorithm::eta, Algorithm::contrastive,
                   Algorithm::lookback}) {
        if (name == to_string(a)) return a;
    }
    throw InvalidArgument("unknown decoding algorithm '" + std::string(name) + "'");
}

LookbackMode parse_lookback_mode(std::string_view name) {
    if (name == "uniform") return LookbackMode::uniform;
    if (name == "softmax") return LookbackMode::softmax;
    throw InvalidArgument("unknown look-back mode '" + std::string(name) + "'");
}

void DecodeConfig::validate() const {
    if (max_new_tokens < 0) throw InvalidArgument("max_new_tokens must be >= 0");
    if (summary_top < 0) throw InvalidArgument("summary_top must be >= 0");
    switch (algorithm) {
        case Algorithm::nucleus:
            if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidArgument("top_p must be in (0, 1]");
            break;
        case Algorithm::typical:
            if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("tau must be in (0, 1]");
            break;
        case Algorithm::eta:
            if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be > 0");
            break;
        case Algorithm::contrastive:
            if (contrastive_k < 1) throw InvalidArgument("contrastive k must be >= 1");
            if (!(contrastive_alpha >= 0.0 && contrastive_alpha <= 1.0)) {
                throw InvalidArgument("contrastive alpha must be in [0, 1]");
            }
            break;
        case Algorithm::lookback:
            if (lookback_k < 1) throw InvalidArgument("look-back k must be >= 1");
            if (std::isnan(lookback_alpha)) throw InvalidArgument("look-back alpha is NaN");
            break;
        case Algorithm::greedy: break;
    }
}

namespace {

constexpr double kNeverAlarm = -std::numeric_limits<double>::infinity();

// Shared decoding loop. `choose(current, context, history, step)` returns the
// next token and may fill step.candidates.
template <typename Choose>
GenerationRecord run_loop(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg,
                          bool signals, double alarm_alpha, Choose&& choose) {
    cfg.validate();
    if (prefix.empty()) throw InvalidArgument("decoding requires a nonempty prefix");
    check_tokens(prefix, lm.vocab());

    GenerationRecord rec;
    rec.prefix.assign(prefix.begin(), prefix.end());
    rec.config = cfg;
    rec.backend = lm.backend_id();

    auto history = signals ? DistHistory::for_prefix(lm, prefix, cfg.history_includes_prefix)
                           : DistHistory({}, 0, cfg.history_includes_prefix);
    const std::size_t summary = std::min<std::size_t>(static_cast<std::size_t>(cfg.summary_top), lm.vocab().size());
    TokenSeq context(prefix.begin(), prefix.end());

    for (int t = 0; t < cfg.max_new_tokens; ++t) {
        ProbDist current = lm.next_dist(context);
        if (current.size() != lm.vocab().size()) throw BackendError("backend returned a wrongly sized distribution", false);
        StepRecord step;
        step.entropy = dist_entropy(current);
        if (summary > 0) step.top = dist_top_k(current, summary);
        if (signals) step.signals = compute_signals(current, history, alarm_alpha);

        const TokenId token = choose(current, std::span<const TokenId>(context), history, step);
        step.token = token;

        if (signals) history.append(current);
        rec.step_dists.push_back(std::move(current));
        rec.steps.push_back(std::move(step));
        rec.continuation.push_back(token);
        context.push_back(token);
        if (token == Vocabulary::eot_id) break;
    }
    return rec;
}

TokenId sample_from(const ProbDist& p, std::vector<TokenId> kept, Rng& rng) {
    std::sort(kept.begin(), kept.end());
    std::vector<double> w(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) w[i] = p[kept[i]];
    return kept[sample_index(w, rng)];
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

std::vector<double> require_rep(const ConditionalLM& lm, std::span<const TokenId> context) {
    auto rep = lm.representation(context);
    if (!rep) throw InvalidArgument("contrastive search requires representations");
    return std::move(*rep);
}

}  // namespace

GenerationRecord decode_greedy(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg) {
    return run_loop(lm, prefix, cfg, cfg.track_signals, kNeverAlarm,
                    [](const ProbDist& p, auto, const DistHistory&, StepRecord&) { return p.argmax(); });
}

GenerationRecord decode_sampling(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg) {
    if (cfg.algorithm != Algorithm::nucleus && cfg.algorithm != Algorithm::typical &&
        cfg.algorithm != Algorithm::eta) {
        throw InvalidArgument("decode_sampling needs a nucleus, typical or eta configuration");
    }
    Rng rng(cfg.seed);
    return run_loop(lm, prefix, cfg, cfg.track_signals, kNeverAlarm,
                    [&](const ProbDist& p, auto, const DistHistory&, StepRecord&) {
                        switch (cfg.algorithm) {
                            case Algorithm::nucleus: return sample_from(p, nucleus_keep(p, cfg.top_p), rng);
                            case Algorithm::typical: return sample_from(p, typical_keep(p, cfg.tau), rng);
                            default: return sample_from(p, eta_keep(p, cfg.eta), rng);
                        }
                    });
}

GenerationRecord decode_contrastive(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg) {
    cfg.validate();
    if (prefix.empty()) throw InvalidArgument("decoding requires a nonempty prefix");
    check_tokens(prefix, lm.vocab());
    // rep(x_<=j) for every token already in the sequence.
    std::vector<std::vector<double>> past;
    for (std::size_t j = 1; j <= prefix.size(); ++j) past.push_back(require_rep(lm, prefix.first(j)));

    const auto k = std::min<std::size_t>(static_cast<std::size_t>(cfg.contrastive_k), lm.vocab().size());
    const double a = cfg.contrastive_alpha;
    return run_loop(lm, prefix, cfg, cfg.track_signals, kNeverAlarm,
                    [&](const ProbDist& p, std::span<const TokenId> context, const DistHistory&, StepRecord&) {
                        auto top = dist_top_k(p, k);
                        TokenSeq extended(context.begin(), context.end());
                        extended.push_back(0);
                        std::size_t best = 0;
                        double best_score = -std::numeric_limits<double>::infinity();
                        std::vector<double> best_rep;
                        for (std::size_t i = 0; i < top.size(); ++i) {
                            extended.back() = top[i].id;
                            auto rep = require_rep(lm, extended);
                            double penalty = 0.0;
                            if (!past.empty()) {
                                penalty = -std::numeric_limits<double>::infinity();
                                for (const auto& h : past) penalty = std::max(penalty, cosine(rep, h));
                            }
                            const double score = (1.0 - a) * top[i].prob - a * penalty;
                            if (score > best_score) {
                                best_score = score;
                                best = i;
                                best_rep = std::move(rep);
                            }
                        }
                        past.push_back(std::move(best_rep));
                        return top[best].id;
                    });
}

GenerationRecord decode_lookback(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(cfg.lookback_k) > lm.vocab().size()) {
        throw InvalidArgument("look-back k=" + std::to_string(cfg.lookback_k) + " exceeds vocabulary size " +
                              std::to_string(lm.vocab().size()));
    }
    Rng rng(cfg.seed);
    const auto k = static_cast<std::size_t>(cfg.lookback_k);
    return run_loop(
        lm, prefix, cfg, true, cfg.lookback_alpha,
        [&](const ProbDist& p, std::span<const TokenId> context, const DistHistory& history, StepRecord& step) {
            if (!step.signals.alarm) return p.argmax();

            auto top = dist_top_k(p, k);
            step.candidates.reserve(top.size());
            if (cfg.lookback_mode == LookbackMode::uniform) {
                for (const auto& c : top) step.candidates.push_back({c.id, 1.0 / static_cast<double>(k), std::nullopt});
            } else {
                std::vector<double> kls;
                kls.reserve(top.size());
                for (const auto& c : top) kls.push_back(lookahead_prefix_kl(lm, context, c.id, history));
                auto q = softmax_neg(kls);
                for (std::size_t i = 0; i < top.size(); ++i) step.candidates.push_back({top[i].id, q[i], kls[i]});
            }

            std::vector<std::size_t> order(step.candidates.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return step.candidates[a].id < step.candidates[b].id; });
            std::vector<double> w(order.size());
            for (std::size_t i = 0; i < order.size(); ++i) w[i] = step.candidates[order[i]].prob;
            return step.candidates[order[sample_index(w, rng)]].id;
        });
}

GenerationRecord decode(const ConditionalLM& lm, std::span<const TokenId> prefix, const DecodeConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::greedy: return decode_greedy(lm, prefix, cfg);
        case Algorithm::nucleus:
        case Algorithm::typical:
        case Algorithm::eta: return decode_sampling(lm, prefix, cfg);
        case Algorithm::contrastive: return decode_contrastive(lm, prefix, cfg);
        case Algorithm::lookback: return decode_lookback(lm, prefix, cfg);
    }
    throw InvalidArgument("unknown decoding algorithm");
}

TokenSeq evaluated_tokens(const GenerationRecord& record) {
    TokenSeq out = record.continuation;
    if (!out.empty() && out.back() == Vocabulary::eot_id) out.pop_back();
    return out;
}

void recompute_step_dists(const ConditionalLM& lm, GenerationRecord& record) {
    record.step_dists.clear();
    TokenSeq context = record.prefix;
    for (auto token : record.continuation) {
        record.step_dists.push_back(lm.next_dist(context));
        context.push_back(token);
    }
}

}  // namespace lookback
