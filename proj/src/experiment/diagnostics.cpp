// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "lookback/error.hpp"
#include "lookback/experiment.hpp"

namespace lookback {

namespace {

std::string num(double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string("inf"); }

std::vector<double> min_max(std::span<const double> xs) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : xs) {
        if (!std::isfinite(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) {
        if (!std::isfinite(x)) out.push_back(x);
        else out.push_back(hi > lo ? (x - lo) / (hi - lo) : 0.0);
    }
    return out;
}

void write(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

DiagnosticFiles export_diagnostics(const GenerationRecord& record, const std::filesystem::path& out_dir,
                                   bool normalize) {
    if (record.step_dists.size() != record.steps.size()) {
        throw InvalidArgument("diagnostics need the step distributions of every step");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory '" + out_dir.string() + "': " + ec.message());

    DiagnosticFiles files{out_dir / "heatmap.csv", out_dir / "curves.csv", out_dir / "alarms.csv"};
    const std::size_t n = record.steps.size();

    std::string heat = "step";
    for (std::size_t j = 0; j < n; ++j) heat += fmt::format(",{}", j);
    heat += '\n';
    const auto m = pairwise_kl_matrix(record.step_dists);
    for (std::size_t i = 0; i < n; ++i) {
        heat += std::to_string(i);
        for (std::size_t j = 0; j < n; ++j) heat += "," + num(m[i][j]);
        heat += '\n';
    }
    write(files.heatmap, heat);

    std::vector<double> hist, pre;
    for (const auto& s : record.steps) {
        hist.push_back(s.signals.kl_min_history);
        pre.push_back(s.signals.kl_min_prefix);
    }
    std::string curves = "step,kl_min_history,kl_min_prefix,alarm";
    if (normalize) curves += ",kl_min_history_norm,kl_min_prefix_norm";
    curves += '\n';
    const auto hist_n = min_max(hist);
    const auto pre_n = min_max(pre);
    for (std::size_t i = 0; i < n; ++i) {
        curves += fmt::format("{},{},{},{}", i, num(hist[i]), num(pre[i]), record.steps[i].signals.alarm ? 1 : 0);
        if (normalize) curves += "," + num(hist_n[i]) + "," + num(pre_n[i]);
        curves += '\n';
    }
    write(files.curves, curves);

    std::string alarms = "step,token,kl_min_history,argmin_history,candidates\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = record.steps[i];
        if (!s.signals.alarm) continue;
        std::string cands;
        for (const auto& c : s.candidates) {
            if (!cands.empty()) cands += ' ';
            cands += fmt::format("{}:{}", c.id, c.prob);
        }
        alarms += fmt::format("{},{},{},{},{}\n", i, s.token, num(s.signals.kl_min_history),
                              s.signals.argmin_history ? std::to_string(*s.signals.argmin_history) : std::string(),
                              cands);
    }
    write(files.alarms, alarms);
    return files;
}

}  // namespace lookback
