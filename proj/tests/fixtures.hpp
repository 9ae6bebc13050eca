// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Constructed corpora shared by the unit tests and the acceptance suite.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lookback/core.hpp"
#include "lookback/ngram.hpp"
#include "lookback/rng.hpp"

namespace fixtures {

using lookback::TokenSeq;

inline std::vector<std::string> words(const std::string& stem, int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

inline std::string join(const std::vector<std::string>& ws) {
    std::string s;
    for (const auto& w : ws) {
        if (!s.empty()) s += ' ';
        s += w;
    }
    return s;
}

inline std::string pick(const std::vector<std::string>& ws, lookback::Rng& rng) {
    return ws[rng.below(ws.size())];
}

// Deterministic cycle: long lines repeating c0 .. c{L-1} after a few filler
// words, mixed with lines of random filler. A trigram model trained on it
// continues "... c0 c1" around the cycle under greedy decoding.
struct CycleFixture {
    static constexpr int cycle_len = 7;
    std::vector<std::string> cycle = words("c", cycle_len);
    std::vector<std::string> filler = words("f", 12);
    std::vector<std::string> lines;
    std::vector<std::string> prefixes;  // 20 prompts ending in "c0 c1"

    explicit CycleFixture(std::uint64_t seed = 7) {
        lookback::Rng rng(seed);
        for (int i = 0; i < 20; ++i) {
            std::vector<std::string> line;
            for (int j = 0; j < 3; ++j) line.push_back(pick(filler, rng));
            for (int j = 0; j < 10 * cycle_len; ++j) line.push_back(cycle[static_cast<std::size_t>(j % cycle_len)]);
            lines.push_back(join(line));
        }
        for (int i = 0; i < 60; ++i) {
            std::vector<std::string> line;
            for (int j = 0; j < 30; ++j) {
                line.push_back(rng.uniform() < 0.15 ? pick(cycle, rng) : pick(filler, rng));
            }
            lines.push_back(join(line));
        }
        for (int i = 0; i < 20; ++i) {
            std::vector<std::string> p;
            for (int j = 0; j < 3; ++j) p.push_back(pick(filler, rng));
            p.push_back("c0");
            p.push_back("c1");
            prefixes.push_back(join(p));
        }
    }

    lookback::NGramModel model(int order = 3) const {
        lookback::NGramParams params;
        params.order = order;
        params.add_k = 0.1;
        return lookback::NGramModel::train_text(lines, params);
    }
};

// Two topics with disjoint vocabularies (a*, b*). Bridge lines of A text
// contain a hub word b0 that opens a short run of B words; the hub follows A
// words often enough to rank among the top candidates and leads away from A.
// Few plain B lines keep the unigram dominated by topic A.
struct DriftFixture {
    std::vector<std::string> topic_a = words("a", 16);
    std::vector<std::string> topic_b = words("b", 16);
    std::vector<std::string> hubs{"b0"};
    std::vector<std::string> a_lines;
    std::vector<std::string> b_lines;
    std::vector<std::string> bridge_lines;
    std::vector<std::string> prefixes;  // 20 prompts drawn from topic A

    explicit DriftFixture(std::uint64_t seed = 11, double hub_rate = 0.25, int run = 4, int num_b = 10) {
        lookback::Rng rng(seed);
        auto plain = [&](const std::vector<std::string>& vocab, int len) {
            std::vector<std::string> line;
            for (int j = 0; j < len; ++j) line.push_back(pick(vocab, rng));
            return join(line);
        };
        for (int i = 0; i < 80; ++i) a_lines.push_back(plain(topic_a, 40));
        for (int i = 0; i < num_b; ++i) b_lines.push_back(plain(topic_b, 40));
        for (int i = 0; i < 80; ++i) {
            std::vector<std::string> line;
            while (line.size() < 40) {
                line.push_back(pick(topic_a, rng));
                if (rng.uniform() < hub_rate) {
                    line.push_back(pick(hubs, rng));
                    for (int j = 0; j < run; ++j) line.push_back(pick(topic_b, rng));
                }
            }
            bridge_lines.push_back(join(line));
        }
        for (int i = 0; i < 20; ++i) prefixes.push_back(plain(topic_a, 12));
    }

    std::vector<std::string> all_lines() const {
        std::vector<std::string> out = a_lines;
        out.insert(out.end(), b_lines.begin(), b_lines.end());
        out.insert(out.end(), bridge_lines.begin(), bridge_lines.end());
        return out;
    }

    lookback::NGramModel model(int order = 2) const {
        lookback::NGramParams params;
        params.order = order;
        params.add_k = 0.1;
        return lookback::NGramModel::train_text(all_lines(), params);
    }
};

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        lookback::Rng rng(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
        path_ = std::filesystem::temp_directory_path() /
                ("lookback-test-" + std::to_string(rng.next_u64() % 1000000007ull) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& l : lines) out << l << '\n';
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace fixtures
