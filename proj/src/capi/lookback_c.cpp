// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/lookback.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "lookback/error.hpp"
#include "lookback/experiment.hpp"

struct lb_lm {
    std::unique_ptr<lookback::ConditionalLM> impl;
};

struct lb_record {
    lookback::GenerationRecord impl;
};

namespace {

thread_local std::string g_last_error;

lb_status to_status(lookback::ErrorCode code) {
    switch (code) {
    case lookback::ErrorCode::invalid_argument: return LB_ERR_INVALID_ARGUMENT;
    case lookback::ErrorCode::io: return LB_ERR_IO;
    case lookback::ErrorCode::format: return LB_ERR_FORMAT;
    case lookback::ErrorCode::backend_retryable: return LB_ERR_BACKEND_RETRYABLE;
    case lookback::ErrorCode::backend_fatal: return LB_ERR_BACKEND_FATAL;
    case lookback::ErrorCode::internal: return LB_ERR_INTERNAL;
    }
    return LB_ERR_INTERNAL;
}

template <typename Fn>
lb_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LB_OK;
    } catch (const lookback::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = std::string("invalid JSON: ") + e.what();
        return LB_ERR_FORMAT;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return LB_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LB_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return LB_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw lookback::InvalidArgument(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

lookback::ExperimentConfig experiment_config(const lb_experiment_options* opts) {
    require(opts, "options");
    require(opts->config_path, "config_path");
    auto cfg = lookback::load_experiment_config(opts->config_path);
    if (opts->out_dir != nullptr) cfg.out = opts->out_dir;
    if (opts->has_seed) cfg.seed = opts->seed;
    if (opts->workers > 0) cfg.workers = opts->workers;
    if (opts->num_instances > 0) cfg.num_instances = static_cast<std::size_t>(opts->num_instances);
    if (opts->max_new_tokens > 0) {
        cfg.max_new_tokens = opts->max_new_tokens;
        for (auto& d : cfg.decoders) d.config.max_new_tokens = opts->max_new_tokens;
    }
    if (opts->diagnostics >= 0) cfg.diagnostics = opts->diagnostics != 0;
    cfg.validate();
    return cfg;
}

}  // namespace

extern "C" {

const char* lb_version(void) { return LOOKBACK_VERSION; }

const char* lb_last_error(void) { return g_last_error.c_str(); }

void lb_string_free(char* s) { std::free(s); }

void lb_ids_free(uint32_t* ids) { std::free(ids); }

void lb_ngram_params_init(lb_ngram_params* params) {
    if (params == nullptr) return;
    lookback::NGramParams d;
    params->order = static_cast<uint32_t>(d.order);
    params->add_k = d.add_k;
    params->lambdas = nullptr;
}

lb_status lb_lm_train_file(const char* corpus_path, const lb_ngram_params* params, lb_lm** out) {
    return guarded([&] {
        require(corpus_path, "corpus_path");
        require(out, "out");
        lookback::NGramParams p;
        if (params != nullptr) {
            p.order = static_cast<int>(params->order);
            p.add_k = params->add_k;
            if (params->lambdas != nullptr) p.lambdas.assign(params->lambdas, params->lambdas + params->order);
        }
        auto lines = lookback::read_lines(corpus_path);
        auto model = lookback::NGramModel::train_text(lines, p);
        *out = new lb_lm{std::make_unique<lookback::NGramModel>(std::move(model))};
    });
}

lb_status lb_lm_load(const char* model_path, lb_lm** out) {
    return guarded([&] {
        require(model_path, "model_path");
        require(out, "out");
        *out = new lb_lm{std::make_unique<lookback::NGramModel>(lookback::NGramModel::load(model_path))};
    });
}

lb_status lb_lm_save(const lb_lm* lm, const char* model_path) {
    return guarded([&] {
        require(lm, "lm");
        require(model_path, "model_path");
        const auto* ngram = dynamic_cast<const lookback::NGramModel*>(lm->impl.get());
        if (ngram == nullptr) throw lookback::InvalidArgument("only n-gram models can be saved");
        ngram->save(model_path);
    });
}

lb_status lb_lm_save_vocab(const lb_lm* lm, const char* vocab_path) {
    return guarded([&] {
        require(lm, "lm");
        require(vocab_path, "vocab_path");
        lm->impl->vocab().save(vocab_path);
    });
}

lb_status lb_lm_remote(const char* endpoint, const char* vocab_path, uint32_t top_n, uint32_t timeout_ms,
                       uint32_t retries, lb_lm** out) {
    return guarded([&] {
        require(endpoint, "endpoint");
        require(vocab_path, "vocab_path");
        require(out, "out");
        lookback::RemoteLMConfig cfg;
        cfg.endpoint = endpoint;
        cfg.top_n = static_cast<int>(top_n);
        cfg.timeout = std::chrono::milliseconds(timeout_ms);
        cfg.retries = static_cast<int>(retries);
        auto vocab = lookback::Vocabulary::load(vocab_path);
        *out = new lb_lm{std::make_unique<lookback::RemoteLM>(std::move(vocab), cfg)};
    });
}

lb_status lb_lm_from_config(const char* config_path, lb_lm** out) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out, "out");
        auto cfg = lookback::load_experiment_config(config_path);
        *out = new lb_lm{lookback::make_backend(cfg)};
    });
}

lb_status lb_lm_vocab_size(const lb_lm* lm, size_t* out) {
    return guarded([&] {
        require(lm, "lm");
        require(out, "out");
        *out = lm->impl->vocab().size();
    });
}

lb_status lb_lm_next_dist(const lb_lm* lm, const uint32_t* context, size_t context_len, double* probs,
                          size_t probs_len) {
    return guarded([&] {
        require(lm, "lm");
        require(probs, "probs");
        if (context_len > 0) require(context, "context");
        if (probs_len != lm->impl->vocab().size()) throw lookback::InvalidArgument("probs_len must equal vocab size");
        std::span<const lookback::TokenId> ctx(context, context_len);
        lookback::check_tokens(ctx, lm->impl->vocab());
        auto dist = lm->impl->next_dist(ctx);
        std::copy(dist.probs().begin(), dist.probs().end(), probs);
    });
}

lb_status lb_lm_tokenize(const lb_lm* lm, const char* text, uint32_t** ids, size_t* len) {
    return guarded([&] {
        require(lm, "lm");
        require(text, "text");
        require(ids, "ids");
        require(len, "len");
        auto seq = lookback::tokenize(text, lm->impl->vocab());
        auto* buf = static_cast<uint32_t*>(std::malloc(std::max<std::size_t>(seq.size(), 1) * sizeof(uint32_t)));
        if (buf == nullptr) throw std::bad_alloc();
        std::copy(seq.begin(), seq.end(), buf);
        *ids = buf;
        *len = seq.size();
    });
}

void lb_lm_free(lb_lm* lm) { delete lm; }

void lb_decode_params_init(lb_decode_params* params) {
    if (params == nullptr) return;
    lookback::DecodeConfig d;
    params->algorithm = "greedy";
    params->max_new_tokens = d.max_new_tokens;
    params->seed = d.seed;
    params->top_p = d.top_p;
    params->tau = d.tau;
    params->eta = d.eta;
    params->k = d.lookback_k;
    params->alpha = d.lookback_alpha;
    params->mode = "softmax";
    params->history_includes_prefix = d.history_includes_prefix ? 1 : 0;
}

lb_status lb_decode(const lb_lm* lm, const char* prefix_text, const lb_decode_params* params, lb_record** out) {
    return guarded([&] {
        require(lm, "lm");
        require(prefix_text, "prefix_text");
        require(params, "params");
        require(out, "out");
        lookback::DecodeConfig cfg;
        cfg.algorithm = lookback::parse_algorithm(params->algorithm != nullptr ? params->algorithm : "greedy");
        cfg.max_new_tokens = params->max_new_tokens;
        cfg.seed = params->seed;
        cfg.top_p = params->top_p;
        cfg.tau = params->tau;
        cfg.eta = params->eta;
        if (cfg.algorithm == lookback::Algorithm::contrastive) {
            cfg.contrastive_k = params->k;
            cfg.contrastive_alpha = params->alpha;
        } else {
            cfg.lookback_k = params->k;
            cfg.lookback_alpha = params->alpha;
        }
        if (params->mode != nullptr) cfg.lookback_mode = lookback::parse_lookback_mode(params->mode);
        cfg.history_includes_prefix = params->history_includes_prefix != 0;
        auto prefix = lookback::tokenize(prefix_text, lm->impl->vocab());
        *out = new lb_record{lookback::decode(*lm->impl, prefix, cfg)};
    });
}

lb_status lb_record_json(const lb_record* record, const lb_lm* lm, char** out) {
    return guarded([&] {
        require(record, "record");
        require(lm, "lm");
        require(out, "out");
        *out = dup_string(lookback::record_to_json(record->impl, lm->impl->vocab()).dump());
    });
}

lb_status lb_record_continuation(const lb_record* record, const lb_lm* lm, char** text) {
    return guarded([&] {
        require(record, "record");
        require(lm, "lm");
        require(text, "text");
        *text = dup_string(lookback::detokenize(record->impl.continuation, lm->impl->vocab()));
    });
}

lb_status lb_record_length(const lb_record* record, size_t* steps) {
    return guarded([&] {
        require(record, "record");
        require(steps, "steps");
        *steps = record->impl.steps.size();
    });
}

lb_status lb_record_alarms(const lb_record* record, size_t* alarms) {
    return guarded([&] {
        require(record, "record");
        require(alarms, "alarms");
        std::size_t n = 0;
        for (const auto& s : record->impl.steps) n += s.signals.alarm ? 1 : 0;
        *alarms = n;
    });
}

lb_status lb_record_from_json(const lb_lm* lm, const char* json, lb_record** out) {
    return guarded([&] {
        require(lm, "lm");
        require(json, "json");
        require(out, "out");
        auto rec = lookback::record_from_json(nlohmann::json::parse(json));
        lookback::recompute_step_dists(*lm->impl, rec);
        *out = new lb_record{std::move(rec)};
    });
}

lb_status lb_record_export_diagnostics(const lb_record* record, const char* out_dir, int normalize) {
    return guarded([&] {
        require(record, "record");
        require(out_dir, "out_dir");
        lookback::export_diagnostics(record->impl, out_dir, normalize != 0);
    });
}

void lb_record_free(lb_record* record) { delete record; }

void lb_experiment_options_init(lb_experiment_options* opts) {
    if (opts == nullptr) return;
    opts->config_path = nullptr;
    opts->out_dir = nullptr;
    opts->has_seed = 0;
    opts->seed = 0;
    opts->workers = 0;
    opts->num_instances = 0;
    opts->max_new_tokens = 0;
    opts->diagnostics = -1;
}

lb_status lb_run_experiment(const lb_experiment_options* opts, char** metrics_csv) {
    return guarded([&] {
        auto cfg = experiment_config(opts);
        auto result = lookback::run_experiment(cfg);
        if (metrics_csv != nullptr) *metrics_csv = dup_string(result.metrics_csv);
    });
}

lb_status lb_run_sweep(const lb_experiment_options* opts, char** summary_json) {
    return guarded([&] {
        auto cfg = experiment_config(opts);
        lookback::sweep_and_select(cfg);
        if (summary_json != nullptr) {
            std::ifstream in(cfg.out / "sweep_selected.json", std::ios::binary);
            std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            if (!in && !in.eof()) throw lookback::IoError("cannot read sweep summary");
            *summary_json = dup_string(text);
        }
    });
}

}  // extern "C"
