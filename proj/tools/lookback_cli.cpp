// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library only through lookback.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lookback/lookback.h"

namespace {

struct Failure {
    lb_status status;
};

void check(lb_status s) {
    if (s != LB_OK) {
        std::cerr << "error: " << lb_last_error() << '\n';
        throw Failure{s};
    }
}

struct LmHandle {
    lb_lm* p = nullptr;
    ~LmHandle() { lb_lm_free(p); }
};

struct RecordHandle {
    lb_record* p = nullptr;
    ~RecordHandle() { lb_record_free(p); }
};

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { lb_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct Common {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string config;
};

void add_common(CLI::App* app, Common& c, const std::string& out_help) {
    app->add_option("--seed", c.seed, "Random seed");
    app->add_option("--out", c.out, out_help);
    app->add_option("--config", c.config, "Experiment config file")->check(CLI::ExistingFile);
}

struct BackendOpts {
    std::string model;
    std::string endpoint;
    std::string vocab;
    std::uint32_t top_n = 20;
    std::uint32_t timeout_ms = 10000;
    std::uint32_t retries = 2;
};

void add_backend(CLI::App* app, BackendOpts& b) {
    app->add_option("--model", b.model, "n-gram model file")->check(CLI::ExistingFile);
    app->add_option("--endpoint", b.endpoint, "HTTP next-token endpoint");
    app->add_option("--vocab", b.vocab, "Vocabulary file of the remote backend")->check(CLI::ExistingFile);
    app->add_option("--top-n", b.top_n, "Log-probabilities requested per step");
    app->add_option("--timeout-ms", b.timeout_ms, "Per-request timeout");
    app->add_option("--retries", b.retries, "Extra attempts after a failed request");
}

void open_backend(const BackendOpts& b, const Common& c, LmHandle& lm) {
    if (!b.model.empty()) {
        check(lb_lm_load(b.model.c_str(), &lm.p));
    } else if (!b.endpoint.empty()) {
        if (b.vocab.empty()) throw CLI::ValidationError("--endpoint requires --vocab");
        check(lb_lm_remote(b.endpoint.c_str(), b.vocab.c_str(), b.top_n, b.timeout_ms, b.retries, &lm.p));
    } else if (!c.config.empty()) {
        check(lb_lm_from_config(c.config.c_str(), &lm.p));
    } else {
        throw CLI::ValidationError("one of --model, --endpoint or --config is required");
    }
}

std::vector<std::string> nonblank_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot read '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
    }
    return lines;
}

// ---- train-lm

struct TrainOpts {
    std::string train;
    std::uint32_t order = 3;
    double add_k = 0.1;
    std::vector<double> lambdas;
    std::string vocab_out;
};

void run_train(const TrainOpts& o, const Common& c) {
    if (c.out.empty()) throw CLI::ValidationError("--out is required");
    LmHandle lm;
    if (!o.train.empty()) {
        lb_ngram_params p;
        lb_ngram_params_init(&p);
        p.order = o.order;
        p.add_k = o.add_k;
        if (!o.lambdas.empty()) {
            if (o.lambdas.size() != o.order) throw CLI::ValidationError("--lambdas needs one weight per order");
            p.lambdas = o.lambdas.data();
        }
        check(lb_lm_train_file(o.train.c_str(), &p, &lm.p));
    } else if (!c.config.empty()) {
        check(lb_lm_from_config(c.config.c_str(), &lm.p));
    } else {
        throw CLI::ValidationError("one of --train or --config is required");
    }
    check(lb_lm_save(lm.p, c.out.c_str()));
    if (!o.vocab_out.empty()) check(lb_lm_save_vocab(lm.p, o.vocab_out.c_str()));
    std::size_t v = 0;
    check(lb_lm_vocab_size(lm.p, &v));
    std::cerr << "wrote " << c.out << " (|V| = " << v << ")\n";
}

// ---- decode

struct DecodeOpts {
    BackendOpts backend;
    std::string prefix;
    std::string prefix_file;
    std::string algorithm = "lookback";
    int max_new_tokens = 256;
    double top_p = 0.95;
    double tau = 0.92;
    double eta = 0.0003;
    std::optional<int> k;
    std::optional<double> alpha;
    std::string mode = "softmax";
    bool no_prefix_history = false;
    std::string diagnostics;
    bool normalize = false;
    bool text = false;
};

void run_decode(const DecodeOpts& o, const Common& c) {
    LmHandle lm;
    open_backend(o.backend, c, lm);
    std::vector<std::string> prefixes;
    if (!o.prefix_file.empty()) prefixes = nonblank_lines(o.prefix_file);
    else prefixes.push_back(o.prefix);

    lb_decode_params p;
    lb_decode_params_init(&p);
    p.algorithm = o.algorithm.c_str();
    p.max_new_tokens = o.max_new_tokens;
    p.seed = c.seed.value_or(0);
    p.top_p = o.top_p;
    p.tau = o.tau;
    p.eta = o.eta;
    const bool contrastive = o.algorithm == "contrastive";
    p.k = o.k.value_or(5);
    p.alpha = o.alpha.value_or(contrastive ? 0.6 : 1.0);
    p.mode = o.mode.c_str();
    p.history_includes_prefix = o.no_prefix_history ? 0 : 1;

    std::ofstream file;
    if (!c.out.empty()) {
        file.open(c.out, std::ios::binary | std::ios::trunc);
        if (!file) throw CLI::ValidationError("cannot write '" + c.out + "'");
    }
    std::ostream& out = c.out.empty() ? std::cout : file;
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
        RecordHandle rec;
        // Each prefix gets its own stream; a single prefix uses the seed as given.
        p.seed = c.seed.value_or(0) + i;
        check(lb_decode(lm.p, prefixes[i].c_str(), &p, &rec.p));
        OwnedString s;
        if (o.text) check(lb_record_continuation(rec.p, lm.p, &s.p));
        else check(lb_record_json(rec.p, lm.p, &s.p));
        out << s.str() << '\n';
        if (!o.diagnostics.empty()) {
            auto dir = std::filesystem::path(o.diagnostics);
            if (prefixes.size() > 1) dir /= std::to_string(i);
            check(lb_record_export_diagnostics(rec.p, dir.string().c_str(), o.normalize ? 1 : 0));
        }
    }
}

// ---- evaluate / sweep

struct RunOpts {
    int workers = 0;
    int num_instances = 0;
    int max_new_tokens = 0;
    bool diagnostics = false;
};

lb_experiment_options experiment_options(const RunOpts& o, const Common& c) {
    if (c.config.empty()) throw CLI::ValidationError("--config is required");
    lb_experiment_options opts;
    lb_experiment_options_init(&opts);
    opts.config_path = c.config.c_str();
    if (!c.out.empty()) opts.out_dir = c.out.c_str();
    if (c.seed) {
        opts.has_seed = 1;
        opts.seed = *c.seed;
    }
    opts.workers = o.workers;
    opts.num_instances = o.num_instances;
    opts.max_new_tokens = o.max_new_tokens;
    if (o.diagnostics) opts.diagnostics = 1;
    return opts;
}

void add_run_options(CLI::App* app, RunOpts& o) {
    app->add_option("--workers", o.workers, "Decoding threads");
    app->add_option("--num-instances", o.num_instances, "Instances sampled from the corpus");
    app->add_option("--max-new-tokens", o.max_new_tokens, "Generation budget per instance");
}

// ---- diagnose

struct DiagnoseOpts {
    BackendOpts backend;
    std::string record;
    std::size_t line = 0;
    bool all = false;
    bool normalize = false;
};

void run_diagnose(const DiagnoseOpts& o, const Common& c) {
    if (c.out.empty()) throw CLI::ValidationError("--out is required");
    LmHandle lm;
    open_backend(o.backend, c, lm);
    const auto lines = nonblank_lines(o.record);
    if (lines.empty()) throw CLI::ValidationError("'" + o.record + "' holds no records");
    std::size_t first = o.all ? 0 : o.line;
    std::size_t last = o.all ? lines.size() : o.line + 1;
    if (first >= lines.size()) throw CLI::ValidationError("--line is past the end of '" + o.record + "'");
    for (std::size_t i = first; i < last; ++i) {
        RecordHandle rec;
        check(lb_record_from_json(lm.p, lines[i].c_str(), &rec.p));
        auto dir = std::filesystem::path(c.out);
        if (o.all) dir /= std::to_string(i);
        check(lb_record_export_diagnostics(rec.p, dir.string().c_str(), o.normalize ? 1 : 0));
        std::size_t steps = 0, alarms = 0;
        check(lb_record_length(rec.p, &steps));
        check(lb_record_alarms(rec.p, &alarms));
        std::cerr << dir.string() << ": " << steps << " steps, " << alarms << " alarms\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Look-back decoding toolkit"};
    app.set_version_flag("--version", std::string(lb_version()));
    app.require_subcommand(1);

    Common train_c, decode_c, eval_c, sweep_c, diag_c;

    TrainOpts train;
    auto* train_cmd = app.add_subcommand("train-lm", "Train an interpolated add-k n-gram model");
    add_common(train_cmd, train_c, "Model file to write");
    train_cmd->add_option("--train", train.train, "Training corpus, one document per line")->check(CLI::ExistingFile);
    train_cmd->add_option("--order", train.order, "n-gram order");
    train_cmd->add_option("--add-k", train.add_k, "Additive smoothing constant");
    train_cmd->add_option("--lambdas", train.lambdas, "Interpolation weights, unigram first")->delimiter(',');
    train_cmd->add_option("--vocab-out", train.vocab_out, "Also write the vocabulary");

    DecodeOpts dec;
    auto* decode_cmd = app.add_subcommand("decode", "Decode continuations of one or more prefixes");
    add_common(decode_cmd, decode_c, "JSONL output file (default stdout)");
    add_backend(decode_cmd, dec.backend);
    auto* prefix_opt = decode_cmd->add_option("--prefix", dec.prefix, "Prefix text");
    auto* prefix_file_opt =
        decode_cmd->add_option("--prefix-file", dec.prefix_file, "One prefix per line")->check(CLI::ExistingFile);
    prefix_opt->excludes(prefix_file_opt);
    decode_cmd->add_option("--algorithm", dec.algorithm, "greedy|nucleus|typical|eta|contrastive|lookback")
        ->check(CLI::IsMember({"greedy", "nucleus", "typical", "eta", "contrastive", "lookback"}));
    decode_cmd->add_option("--max-new-tokens", dec.max_new_tokens, "Generation budget");
    decode_cmd->add_option("--top-p", dec.top_p, "Nucleus mass");
    decode_cmd->add_option("--tau", dec.tau, "Typical mass");
    decode_cmd->add_option("--eta", dec.eta, "Eta threshold");
    decode_cmd->add_option("--k", dec.k, "Candidates (look-back, contrastive)");
    decode_cmd->add_option("--alpha", dec.alpha, "Alarm threshold or degeneration penalty");
    decode_cmd->add_option("--mode", dec.mode, "Look-back sampling: uniform|softmax")
        ->check(CLI::IsMember({"uniform", "softmax"}));
    decode_cmd->add_flag("--no-prefix-history", dec.no_prefix_history, "Keep prefix positions out of the history");
    decode_cmd->add_option("--diagnostics", dec.diagnostics, "Write diagnostics CSVs to this directory");
    decode_cmd->add_flag("--normalize", dec.normalize, "Add min-max normalized curve columns");
    decode_cmd->add_flag("--text", dec.text, "Print continuation text instead of JSON");

    RunOpts eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Run every configured decoder and score it");
    add_common(eval_cmd, eval_c, "Output directory");
    add_run_options(eval_cmd, eval);
    eval_cmd->add_flag("--diagnostics", eval.diagnostics, "Export per-instance diagnostics");

    RunOpts sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid-search look-back k and alpha on the validation split");
    add_common(sweep_cmd, sweep_c, "Output directory");
    add_run_options(sweep_cmd, sweep);

    DiagnoseOpts diag;
    auto* diag_cmd = app.add_subcommand("diagnose", "Export KL heatmap and curves of stored generations");
    add_common(diag_cmd, diag_c, "Output directory");
    add_backend(diag_cmd, diag.backend);
    diag_cmd->add_option("--record", diag.record, "generations JSONL file")->required()->check(CLI::ExistingFile);
    diag_cmd->add_option("--line", diag.line, "Zero-based record line");
    diag_cmd->add_flag("--all", diag.all, "Export every record into numbered subdirectories");
    diag_cmd->add_flag("--normalize", diag.normalize, "Add min-max normalized curve columns");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) run_train(train, train_c);
        else if (*decode_cmd) {
            if (dec.prefix_file.empty() && prefix_opt->count() == 0) {
                throw CLI::ValidationError("one of --prefix or --prefix-file is required");
            }
            run_decode(dec, decode_c);
        } else if (*eval_cmd) {
            auto opts = experiment_options(eval, eval_c);
            OwnedString csv;
            check(lb_run_experiment(&opts, &csv.p));
            std::cout << csv.str();
        } else if (*sweep_cmd) {
            auto opts = experiment_options(sweep, sweep_c);
            OwnedString summary;
            check(lb_run_sweep(&opts, &summary.p));
            std::cout << summary.str();
        } else if (*diag_cmd) {
            run_diagnose(diag, diag_c);
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const Failure& f) {
        return 10 + static_cast<int>(f.status);
    }
    return 0;
}
