// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/mauve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lookback/error.hpp"
#include "lookback/rng.hpp"
#include "lookback/truncation.hpp"

namespace lookback {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    Matrix centers;
    centers.push_back(points[rng.below(points.size())]);
    std::vector<double> d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = sq_dist(points[i], centers[0]);
    while (centers.size() < k) {
        double total = 0.0;
        for (double d : d2) total += d;
        std::size_t pick = total > 0.0 ? sample_index(d2, rng) : rng.below(points.size());
        centers.push_back(points[pick]);
        for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
    }
    return centers;
}

KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iterations) {
    const std::size_t n = points.size();
    const std::size_t dim = points[0].size();
    KMeansResult r;
    r.labels.assign(n, 0);
    bool first = true;
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centers.size(); ++c) {
                double d = sq_dist(points[i], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (first || r.labels[i] != best) changed = true;
            r.labels[i] = best;
        }
        first = false;
        if (!changed) break;
        Matrix sums(centers.size(), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(centers.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[r.labels[i]];
            auto& s = sums[r.labels[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centre
            for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
    }
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) r.inertia += sq_dist(points[i], centers[r.labels[i]]);
    r.centroids = std::move(centers);
    return r;
}

double kl(std::span<const double> p, std::span<const double> q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(s, 0.0);
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, int max_iterations, int restarts, std::uint64_t seed) {
    if (points.empty()) throw InvalidArgument("k-means on an empty point set");
    if (k == 0) throw InvalidArgument("k-means needs k >= 1");
    const std::size_t dim = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dim) throw InvalidArgument("k-means points have mixed dimensions");
    }
    k = std::min(k, points.size());
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        Rng rng(seed + static_cast<std::uint64_t>(r));
        auto result = lloyd(points, seed_plus_plus(points, k, rng), std::max(max_iterations, 1));
        if (result.inertia < best.inertia) best = std::move(result);
    }
    return best;
}

MauveResult mauve_from_histograms(std::vector<double> p_hist, std::vector<double> q_hist, const MauveConfig& cfg) {
    if (p_hist.empty() || p_hist.size() != q_hist.size()) throw InvalidArgument("MAUVE histograms must match in size");
    if (cfg.grid_size < 2) throw InvalidArgument("MAUVE grid size must be >= 2");
    auto smooth = [&](std::vector<double>& h) {
        double total = 0.0;
        for (double v : h) total += v;
        if (!(total > 0.0)) throw InvalidArgument("MAUVE histogram is empty");
        double norm = 0.0;
        for (double& v : h) {
            v = v / total + cfg.epsilon;
            norm += v;
        }
        for (double& v : h) v /= norm;
    };
    smooth(p_hist);
    smooth(q_hist);

    MauveResult res;
    res.clusters = p_hist.size();
    const double lo = 1e-6;
    const double hi = 1.0 - 1e-6;
    std::vector<double> r(p_hist.size());
    res.curve.push_back({0.0, 1.0});
    res.curve.push_back({1.0, 0.0});
    for (int i = 0; i < cfg.grid_size; ++i) {
        const double lambda = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.grid_size - 1);
        for (std::size_t c = 0; c < r.size(); ++c) r[c] = lambda * p_hist[c] + (1.0 - lambda) * q_hist[c];
        res.curve.push_back({std::exp(-cfg.scaling * kl(q_hist, r)), std::exp(-cfg.scaling * kl(p_hist, r))});
    }
    std::sort(res.curve.begin(), res.curve.end(), [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second > b.second);
    });
    double area = 0.0;
    for (std::size_t i = 1; i < res.curve.size(); ++i) {
        area += (res.curve[i].first - res.curve[i - 1].first) * (res.curve[i].second + res.curve[i - 1].second) / 2.0;
    }
    res.score = std::clamp(area, 0.0, 1.0);
    res.p_hist = std::move(p_hist);
    res.q_hist = std::move(q_hist);
    return res;
}

MauveResult mauve_from_embeddings(const Matrix& human, const Matrix& model, const MauveConfig& cfg) {
    if (human.empty() || model.empty()) throw InvalidArgument("MAUVE needs nonempty text sets");
    std::size_t clusters = cfg.num_clusters > 0
                               ? static_cast<std::size_t>(cfg.num_clusters)
                               : std::min<std::size_t>(500, std::max<std::size_t>(2, (human.size() + model.size()) / 10));
    std::vector<std::string> warnings;
    const std::size_t n = human.size() + model.size();
    if (clusters > n) {
        warnings.push_back("MAUVE: " + std::to_string(clusters) + " clusters requested for " + std::to_string(n) +
                           " embeddings; using " + std::to_string(n));
        clusters = n;
    }
    // Cluster in a canonical (lexicographic) point order so the partition does
    // not depend on which side a point came from or on list order.
    std::vector<const std::vector<double>*> refs;
    refs.reserve(n);
    for (const auto& v : human) refs.push_back(&v);
    for (const auto& v : model) refs.push_back(&v);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return *refs[a] < *refs[b]; });
    Matrix sorted;
    sorted.reserve(n);
    for (auto i : order) sorted.push_back(*refs[i]);
    auto km = kmeans(sorted, clusters, cfg.kmeans_iterations, cfg.kmeans_restarts, cfg.seed);
    clusters = km.centroids.size();

    std::vector<double> p(clusters, 0.0), q(clusters, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t i = order[s];
        (i < human.size() ? p : q)[km.labels[s]] += 1.0;
    }
    auto res = mauve_from_histograms(std::move(p), std::move(q), cfg);
    res.warnings = std::move(warnings);
    return res;
}

double mauve(std::span<const TokenSeq> human_texts, std::span<const TokenSeq> model_texts, const Embedder& embedder,
             const MauveConfig& cfg) {
    Matrix h, m;
    h.reserve(human_texts.size());
    m.reserve(model_texts.size());
    for (const auto& t : human_texts) h.push_back(embedder.embed(t));
    for (const auto& t : model_texts) m.push_back(embedder.embed(t));
    return mauve_from_embeddings(h, m, cfg).score;
}

}  // namespace lookback
