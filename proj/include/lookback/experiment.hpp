// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Corpus ingestion, experiment orchestration, hyper-parameter sweeps and
// diagnostics export.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lookback/decode.hpp"
#include "lookback/mauve.hpp"
#include "lookback/ngram.hpp"
#include "lookback/remote.hpp"

namespace lookback {

// ---------------------------------------------------------------------------
// Corpora

struct Instance {
    std::size_t id = 0;  // zero-based line number among nonblank lines
    TokenSeq prefix;
    TokenSeq continuation;
};

enum class PromptMode {
    tokens,       // first prefix_len tokens of the line
    first_field,  // "prompt<TAB>story": the prompt is the prefix
};

struct IngestOptions {
    std::size_t prefix_len = 32;
    std::size_t num_instances = 1000;
    std::uint64_t seed = 0;
    PromptMode prompt_mode = PromptMode::tokens;
    // Human continuations are cut to this many tokens; 0 keeps them whole.
    std::size_t max_continuation = 0;
};

struct IngestResult {
    std::vector<Instance> instances;  // sorted by id
    std::size_t lines = 0;
    std::size_t skipped = 0;  // too short for prefix + one token
};

// Nonblank lines of a UTF-8 text file.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Splits every usable line into (prefix, continuation) and keeps a seeded
// sample of num_instances of them. Throws when nothing is usable.
IngestResult ingest_lines(std::span<const std::string> lines, const Vocabulary& vocab, const IngestOptions& opts);
IngestResult ingest_corpus(const std::filesystem::path& path, const Vocabulary& vocab, const IngestOptions& opts);

// Seeded selection of n ids out of [0, total), returned sorted.
std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Configuration

struct BackendSpec {
    enum class Kind { ngram, remote };
    Kind kind = Kind::ngram;
    // n-gram: loaded when it exists, otherwise trained on the train corpus.
    std::filesystem::path model;
    NGramParams ngram;
    // remote
    RemoteLMConfig remote;
    std::filesystem::path vocab;
};

struct DecoderSpec {
    std::string name;
    DecodeConfig config;
};

struct SweepSpec {
    std::vector<int> ks{5, 8, 10};
    std::vector<double> alphas;  // default 0.5, 0.6, ..., 1.6
    LookbackMode mode = LookbackMode::softmax;
};

std::vector<double> default_alpha_grid();

struct ExperimentConfig {
    std::filesystem::path train;
    std::filesystem::path validation;  // optional; split from test otherwise
    std::filesystem::path test;
    BackendSpec backend;
    std::vector<DecoderSpec> decoders;
    SweepSpec sweep;
    std::size_t prefix_len = 32;
    std::size_t num_instances = 1000;
    int max_new_tokens = 256;
    std::uint64_t seed = 0;
    std::filesystem::path out = "out";
    int workers = 1;
    PromptMode prompt_mode = PromptMode::tokens;
    bool diagnostics = false;
    MauveConfig mauve;
    // Empty means TF-IDF fitted on the training corpus.
    std::string embedder_endpoint;
    std::size_t embedder_dimension = 0;

    // Range checks plus existence of every referenced path.
    void validate() const;
};

// Key-value text with [sections]; see docs/formats.md. Relative paths are
// resolved against `base_dir`. Unknown sections or keys are errors.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::unique_ptr<ConditionalLM> make_backend(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Experiments

struct MetricRow {
    std::string decoder;
    double rep2 = 0.0;  // fractions; the CSV shows them x100
    double rep3 = 0.0;
    double rep4 = 0.0;
    double diversity = 0.0;
    std::optional<double> mauve;  // none for the human row
    double coherence = 0.0;
    std::size_t instances = 0;
    bool partial = false;
};

struct ExperimentResult {
    std::vector<MetricRow> rows;  // "human" first, then the decoders in config order
    std::string metrics_csv;
    std::string generations_jsonl;
};

// Seed of one (decoder, instance) generation.
std::uint64_t derive_seed(std::uint64_t base, std::size_t decoder_index, std::size_t instance_id);

struct EvaluationContext {
    const ConditionalLM& lm;
    const Embedder& embedder;
    MauveConfig mauve;
    int workers = 1;
};

// Aggregate metrics of a set of continuations against their instances.
MetricRow score_continuations(const std::string& name, std::span<const Instance> instances,
                              std::span<const TokenSeq> continuations, const EvaluationContext& ctx,
                              bool with_mauve = true);

std::string metrics_csv(std::span<const MetricRow> rows);

// Decodes every test instance with every configured decoder and writes
// metrics.csv and generations.jsonl (plus diagnostics when enabled) to cfg.out.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ConditionalLM& lm);

struct SweepRow {
    int k = 0;
    double alpha = 0.0;
    LookbackMode mode = LookbackMode::softmax;
    MetricRow metrics;
    double rep2_distance = 0.0;  // |rep2 - human rep2|
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t selected = 0;
    double human_rep2 = 0.0;
    std::string sweep_csv;
};

// Smallest rep-2 distance, then largest MAUVE, then smaller alpha, then
// smaller k. Throws on an empty grid.
std::size_t select_config(std::span<const SweepRow> rows);

// Evaluates every (k, alpha) pair on the validation split and writes
// sweep.csv and sweep_selected.json to cfg.out.
SweepResult sweep_and_select(const ExperimentConfig& cfg);
SweepResult sweep_and_select(const ExperimentConfig& cfg, const ConditionalLM& lm);

std::string sweep_csv(const SweepResult& result);

// Validation and test instances for cfg; disjoint when drawn from one file.
struct Splits {
    std::vector<Instance> validation;
    std::vector<Instance> test;
};
Splits load_splits(const ExperimentConfig& cfg, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Diagnostics

struct DiagnosticFiles {
    std::filesystem::path heatmap;
    std::filesystem::path curves;
    std::filesystem::path alarms;
};

// Writes heatmap.csv (pairwise KL of the step distributions), curves.csv
// (step, kl_min_history, kl_min_prefix, alarm) and alarms.csv. With
// `normalize`, curves.csv gains per-sequence min-max normalized columns.
DiagnosticFiles export_diagnostics(const GenerationRecord& record, const std::filesystem::path& out_dir,
                                   bool normalize = false);

}  // namespace lookback
