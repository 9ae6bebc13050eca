// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "lookback/error.hpp"
#include "lookback/eval.hpp"
#include "lookback/experiment.hpp"
#include "lookback/rng.hpp"

namespace lookback {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Every index runs
// exactly once; order of completion is irrelevant to callers.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::unique_ptr<Embedder> make_embedder(const ExperimentConfig& cfg, const Vocabulary& vocab,
                                        std::span<const Instance> fallback_docs) {
    if (!cfg.embedder_endpoint.empty()) {
        return std::make_unique<RemoteEmbedder>(cfg.embedder_endpoint, cfg.embedder_dimension);
    }
    std::vector<TokenSeq> docs;
    if (!cfg.train.empty()) {
        for (const auto& line : read_lines(cfg.train)) docs.push_back(tokenize(line, vocab));
    } else {
        for (const auto& inst : fallback_docs) {
            TokenSeq d = inst.prefix;
            d.insert(d.end(), inst.continuation.begin(), inst.continuation.end());
            docs.push_back(std::move(d));
        }
    }
    return std::make_unique<TfidfEmbedder>(TfidfEmbedder::fit(docs, vocab.size()));
}

std::string fixed4(double v) { return std::isfinite(v) ? fmt::format("{:.4f}", v) : std::string("nan"); }

struct DecodeOutcome {
    std::vector<std::optional<GenerationRecord>> records;
    std::string first_error;
    std::size_t failures = 0;
};

DecodeOutcome decode_all(const ConditionalLM& lm, std::span<const Instance> instances, const DecodeConfig& base,
                         std::uint64_t seed, std::size_t decoder_index, int workers) {
    DecodeOutcome out;
    out.records.resize(instances.size());
    std::vector<std::string> errors(instances.size());
    parallel_for(instances.size(), workers, [&](std::size_t i) {
        DecodeConfig cfg = base;
        cfg.seed = derive_seed(seed, decoder_index, instances[i].id);
        try {
            out.records[i] = decode(lm, instances[i].prefix, cfg);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!out.records[i]) {
            if (out.failures++ == 0) out.first_error = errors[i];
        }
    }
    return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::size_t decoder_index, std::size_t instance_id) {
    return splitmix64(splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(decoder_index)) ^
                      static_cast<std::uint64_t>(instance_id));
}

MetricRow score_continuations(const std::string& name, std::span<const Instance> instances,
                              std::span<const TokenSeq> continuations, const EvaluationContext& ctx,
                              bool with_mauve) {
    if (instances.size() != continuations.size()) throw InvalidArgument("instances and continuations differ in count");
    MetricRow row;
    row.decoder = name;
    row.instances = instances.size();
    if (instances.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.rep2 = row.rep3 = row.rep4 = row.diversity = row.coherence = nan;
        if (with_mauve) row.mauve = nan;
        return row;
    }
    std::vector<double> coh(instances.size(), 0.0);
    parallel_for(instances.size(), ctx.workers, [&](std::size_t i) {
        // An empty continuation shares nothing with its prefix.
        if (!continuations[i].empty()) coh[i] = coherence(instances[i].prefix, continuations[i], ctx.embedder);
    });
    double r2 = 0.0, r3 = 0.0, r4 = 0.0, c = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        r2 += rep_n(continuations[i], 2);
        r3 += rep_n(continuations[i], 3);
        r4 += rep_n(continuations[i], 4);
        c += coh[i];
    }
    const double n = static_cast<double>(instances.size());
    row.rep2 = r2 / n;
    row.rep3 = r3 / n;
    row.rep4 = r4 / n;
    row.diversity = diversity_from_reps(row.rep2, row.rep3, row.rep4);
    row.coherence = c / n;
    if (with_mauve) {
        std::vector<TokenSeq> human;
        human.reserve(instances.size());
        for (const auto& inst : instances) human.push_back(inst.continuation);
        Matrix h, m;
        for (const auto& t : human) h.push_back(ctx.embedder.embed(t));
        for (const auto& t : continuations) m.push_back(ctx.embedder.embed(t));
        auto res = mauve_from_embeddings(h, m, ctx.mauve);
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
        row.mauve = res.score;
    }
    return row;
}

std::string metrics_csv(std::span<const MetricRow> rows) {
    std::string out = "decoder,rep-2,rep-3,rep-4,diversity,mauve,coherence,status\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.decoder, fixed4(100.0 * r.rep2), fixed4(100.0 * r.rep3),
                           fixed4(100.0 * r.rep4), fixed4(r.diversity), r.mauve ? fixed4(*r.mauve) : std::string("-"),
                           fixed4(r.coherence), r.partial ? "partial" : "ok");
    }
    return out;
}

Splits load_splits(const ExperimentConfig& cfg, const Vocabulary& vocab) {
    IngestOptions opts;
    opts.prefix_len = cfg.prefix_len;
    opts.num_instances = cfg.num_instances;
    opts.seed = cfg.seed;
    opts.prompt_mode = cfg.prompt_mode;
    opts.max_continuation = static_cast<std::size_t>(std::max(cfg.max_new_tokens, 0));

    Splits s;
    if (!cfg.validation.empty()) {
        s.test = ingest_corpus(cfg.test, vocab, opts).instances;
        opts.seed = splitmix64(cfg.seed);
        s.validation = ingest_corpus(cfg.validation, vocab, opts).instances;
        return s;
    }
    // One file: draw up to 2n instances and split them disjointly.
    opts.num_instances = 2 * cfg.num_instances;
    auto all = ingest_corpus(cfg.test, vocab, opts).instances;
    if (all.size() < 2) throw InvalidArgument("test corpus needs at least two usable instances to split");
    auto val_n = std::min(cfg.num_instances, all.size() / 2);
    auto picked = sample_indices(all.size(), val_n, splitmix64(cfg.seed ^ 0x5eedull));
    std::vector<bool> is_val(all.size(), false);
    for (auto i : picked) is_val[i] = true;
    for (std::size_t i = 0; i < all.size(); ++i) (is_val[i] ? s.validation : s.test).push_back(std::move(all[i]));
    if (s.test.size() > cfg.num_instances) s.test.resize(cfg.num_instances);
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    auto lm = make_backend(cfg);
    return run_experiment(cfg, *lm);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ConditionalLM& lm) {
    cfg.validate();
    const auto splits = load_splits(cfg, lm.vocab());
    const auto& test = splits.test;
    auto embedder = make_embedder(cfg, lm.vocab(), test);
    EvaluationContext ctx{lm, *embedder, cfg.mauve, cfg.workers};

    ExperimentResult result;
    {
        std::vector<TokenSeq> human;
        for (const auto& inst : test) human.push_back(inst.continuation);
        result.rows.push_back(score_continuations("human", test, human, ctx, false));
    }

    ensure_dir(cfg.out);
    for (std::size_t d = 0; d < cfg.decoders.size(); ++d) {
        const auto& spec = cfg.decoders[d];
        auto outcome = decode_all(lm, test, spec.config, cfg.seed, d, cfg.workers);

        std::vector<Instance> done;
        std::vector<TokenSeq> conts;
        for (std::size_t i = 0; i < test.size(); ++i) {
            auto& rec = outcome.records[i];
            if (!rec) continue;
            done.push_back(test[i]);
            conts.push_back(evaluated_tokens(*rec));
            auto j = record_to_json(*rec, lm.vocab());
            j["decoder"] = spec.name;
            j["instance"] = test[i].id;
            result.generations_jsonl += j.dump();
            result.generations_jsonl += '\n';
            if (cfg.diagnostics) {
                export_diagnostics(*rec, cfg.out / "diagnostics" / spec.name / std::to_string(test[i].id));
            }
            rec->step_dists.clear();
            rec->step_dists.shrink_to_fit();
        }
        auto row = score_continuations(spec.name, done, conts, ctx, !done.empty());
        if (done.empty()) row.mauve = std::numeric_limits<double>::quiet_NaN();
        if (outcome.failures > 0) {
            row.partial = true;
            std::cerr << "warning: decoder '" << spec.name << "' failed on " << outcome.failures << " of "
                      << test.size() << " instances: " << outcome.first_error << '\n';
        }
        result.rows.push_back(std::move(row));
    }

    result.metrics_csv = metrics_csv(result.rows);
    write_file(cfg.out / "metrics.csv", result.metrics_csv);
    write_file(cfg.out / "generations.jsonl", result.generations_jsonl);
    return result;
}

std::size_t select_config(std::span<const SweepRow> rows) {
    if (rows.empty()) throw InvalidArgument("sweep grid is empty");
    auto mauve_of = [](const SweepRow& r) { return r.metrics.mauve.value_or(-1.0); };
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = rows[best];
        bool better = false;
        if (a.rep2_distance != b.rep2_distance) better = a.rep2_distance < b.rep2_distance;
        else if (mauve_of(a) != mauve_of(b)) better = mauve_of(a) > mauve_of(b);
        else if (a.alpha != b.alpha) better = a.alpha < b.alpha;
        else better = a.k < b.k;
        if (better) best = i;
    }
    return best;
}

std::string sweep_csv(const SweepResult& result) {
    std::string out = "k,alpha,mode,rep-2,rep-3,rep-4,diversity,mauve,coherence,rep2_distance,selected\n";
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& r = result.rows[i];
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.k, r.alpha, to_string(r.mode), r.metrics.rep2,
                           r.metrics.rep3, r.metrics.rep4, r.metrics.diversity, r.metrics.mauve.value_or(-1.0),
                           r.metrics.coherence, r.rep2_distance, i == result.selected ? 1 : 0);
    }
    return out;
}

SweepResult sweep_and_select(const ExperimentConfig& cfg) {
    cfg.validate();
    auto lm = make_backend(cfg);
    return sweep_and_select(cfg, *lm);
}

SweepResult sweep_and_select(const ExperimentConfig& cfg, const ConditionalLM& lm) {
    cfg.validate();
    if (cfg.sweep.ks.empty() || cfg.sweep.alphas.empty()) throw InvalidArgument("sweep grid is empty");
    const auto splits = load_splits(cfg, lm.vocab());
    const auto& val = splits.validation;
    if (val.empty()) throw InvalidArgument("sweep needs validation instances");
    auto embedder = make_embedder(cfg, lm.vocab(), val);
    EvaluationContext ctx{lm, *embedder, cfg.mauve, cfg.workers};

    SweepResult result;
    {
        std::vector<TokenSeq> human;
        for (const auto& inst : val) human.push_back(inst.continuation);
        result.human_rep2 = score_continuations("human", val, human, ctx, false).rep2;
    }
    std::size_t index = 0;
    for (int k : cfg.sweep.ks) {
        for (double alpha : cfg.sweep.alphas) {
            DecodeConfig dc;
            dc.algorithm = Algorithm::lookback;
            dc.lookback_k = k;
            dc.lookback_alpha = alpha;
            dc.lookback_mode = cfg.sweep.mode;
            dc.max_new_tokens = cfg.max_new_tokens;
            auto outcome = decode_all(lm, val, dc, cfg.seed, index++, cfg.workers);
            if (outcome.failures > 0) {
                throw BackendError("sweep configuration k=" + std::to_string(k) + " alpha=" + fmt::format("{}", alpha) +
                                       " failed: " + outcome.first_error,
                                   false);
            }
            std::vector<TokenSeq> conts;
            for (auto& rec : outcome.records) conts.push_back(evaluated_tokens(*rec));
            SweepRow row;
            row.k = k;
            row.alpha = alpha;
            row.mode = cfg.sweep.mode;
            row.metrics = score_continuations(fmt::format("lookback(k={},alpha={})", k, alpha), val, conts, ctx, true);
            row.rep2_distance = std::abs(row.metrics.rep2 - result.human_rep2);
            result.rows.push_back(std::move(row));
        }
    }
    result.selected = select_config(result.rows);
    result.sweep_csv = sweep_csv(result);

    ensure_dir(cfg.out);
    write_file(cfg.out / "sweep.csv", result.sweep_csv);
    const auto& sel = result.rows[result.selected];
    nlohmann::json summary;
    summary["schema"] = "lookback.sweep/1";
    summary["human_rep2"] = result.human_rep2;
    summary["selected"] = {{"row", result.selected},
                           {"k", sel.k},
                           {"alpha", sel.alpha},
                           {"mode", to_string(sel.mode)},
                           {"rep2", sel.metrics.rep2},
                           {"mauve", sel.metrics.mauve.value_or(-1.0)}};
    summary["validation_instances"] = val.size();
    write_file(cfg.out / "sweep_selected.json", summary.dump(2) + "\n");
    return result;
}

}  // namespace lookback
