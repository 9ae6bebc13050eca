// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <numeric>

#include "lookback/error.hpp"
#include "lookback/experiment.hpp"
#include "lookback/rng.hpp"

namespace lookback {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read corpus '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (split_whitespace(line).empty()) continue;
        lines.push_back(std::move(line));
    }
    if (in.bad()) throw IoError("read error on '" + path.string() + "'");
    return lines;
}

std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n >= total) return idx;
    Rng rng(seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < n; ++i) {
        auto j = i + static_cast<std::size_t>(rng.below(total - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

IngestResult ingest_lines(std::span<const std::string> lines, const Vocabulary& vocab, const IngestOptions& opts) {
    if (opts.prefix_len < 1) throw InvalidArgument("prefix_len must be >= 1");
    if (opts.num_instances < 1) throw InvalidArgument("num_instances must be >= 1");
    IngestResult res;
    std::vector<Instance> usable;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (split_whitespace(lines[i]).empty()) continue;
        const std::size_t id = res.lines++;
        Instance inst;
        inst.id = id;
        if (opts.prompt_mode == PromptMode::first_field) {
            auto tab = lines[i].find('\t');
            if (tab == std::string::npos) {
                ++res.skipped;
                continue;
            }
            inst.prefix = tokenize(std::string_view(lines[i]).substr(0, tab), vocab);
            inst.continuation = tokenize(std::string_view(lines[i]).substr(tab + 1), vocab);
            if (inst.prefix.empty() || inst.continuation.empty()) {
                ++res.skipped;
                continue;
            }
        } else {
            auto ids = tokenize(lines[i], vocab);
            if (ids.size() < opts.prefix_len + 1) {
                ++res.skipped;
                continue;
            }
            inst.prefix.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(opts.prefix_len));
            inst.continuation.assign(ids.begin() + static_cast<std::ptrdiff_t>(opts.prefix_len), ids.end());
        }
        if (opts.max_continuation > 0 && inst.continuation.size() > opts.max_continuation) {
            inst.continuation.resize(opts.max_continuation);
        }
        usable.push_back(std::move(inst));
    }
    if (usable.empty()) {
        throw InvalidArgument("no usable instances (" + std::to_string(res.lines) + " lines, " +
                              std::to_string(res.skipped) + " too short)");
    }
    for (auto i : sample_indices(usable.size(), opts.num_instances, opts.seed)) {
        res.instances.push_back(std::move(usable[i]));
    }
    return res;
}

IngestResult ingest_corpus(const std::filesystem::path& path, const Vocabulary& vocab, const IngestOptions& opts) {
    auto lines = read_lines(path);
    return ingest_lines(lines, vocab, opts);
}

}  // namespace lookback
