// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lookback/core.hpp"
#include "lookback/eval.hpp"

namespace lookback {

using Matrix = std::vector<std::vector<double>>;

struct KMeansResult {
    std::vector<std::size_t> labels;
    Matrix centroids;
    double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ seeding; the best of `restarts` runs by
// inertia wins (first one on ties). Deterministic for a given seed.
KMeansResult kmeans(const Matrix& points, std::size_t k, int max_iterations, int restarts, std::uint64_t seed);

struct MauveConfig {
    // 0 picks max(2, (|P| + |Q|) / 10) capped at 500.
    int num_clusters = 0;
    int kmeans_iterations = 300;
    int kmeans_restarts = 5;
    double scaling = 5.0;
    int grid_size = 25;
    double epsilon = 1e-6;
    std::uint64_t seed = 25;
};

struct MauveResult {
    double score = 0.0;
    std::size_t clusters = 0;
    std::vector<double> p_hist;  // human side
    std::vector<double> q_hist;  // model side
    // Divergence curve including the (0, 1) and (1, 0) end points, sorted by x.
    std::vector<std::pair<double, double>> curve;
    std::vector<std::string> warnings;
};

// Area under the divergence frontier of two cluster histograms.
MauveResult mauve_from_histograms(std::vector<double> p_hist, std::vector<double> q_hist, const MauveConfig& cfg);

// Jointly clusters both embedding sets and scores their histograms.
MauveResult mauve_from_embeddings(const Matrix& human, const Matrix& model, const MauveConfig& cfg);

double mauve(std::span<const TokenSeq> human_texts, std::span<const TokenSeq> model_texts, const Embedder& embedder,
             const MauveConfig& cfg = {});

}  // namespace lookback
