// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "lookback/decode.hpp"
#include "lookback/error.hpp"

namespace lookback {

namespace {

constexpr const char* kSchema = "lookback.generation/1";

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_or_inf(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

nlohmann::json config_to_json(const DecodeConfig& cfg) {
    nlohmann::json j;
    j["algorithm"] = to_string(cfg.algorithm);
    j["max_new_tokens"] = cfg.max_new_tokens;
    j["seed"] = cfg.seed;
    switch (cfg.algorithm) {
        case Algorithm::nucleus: j["top_p"] = cfg.top_p; break;
        case Algorithm::typical: j["tau"] = cfg.tau; break;
        case Algorithm::eta: j["eta"] = cfg.eta; break;
        case Algorithm::contrastive:
            j["k"] = cfg.contrastive_k;
            j["alpha"] = cfg.contrastive_alpha;
            break;
        case Algorithm::lookback:
            j["k"] = cfg.lookback_k;
            j["alpha"] = cfg.lookback_alpha;
            j["mode"] = to_string(cfg.lookback_mode);
            break;
        case Algorithm::greedy: break;
    }
    j["history_includes_prefix"] = cfg.history_includes_prefix;
    j["track_signals"] = cfg.track_signals;
    j["summary_top"] = cfg.summary_top;
    return j;
}

DecodeConfig config_from_json(const nlohmann::json& j) {
    DecodeConfig cfg;
    cfg.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    cfg.max_new_tokens = j.value("max_new_tokens", cfg.max_new_tokens);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.top_p = j.value("top_p", cfg.top_p);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.eta = j.value("eta", cfg.eta);
    if (cfg.algorithm == Algorithm::contrastive) {
        cfg.contrastive_k = j.value("k", cfg.contrastive_k);
        cfg.contrastive_alpha = j.value("alpha", cfg.contrastive_alpha);
    } else if (cfg.algorithm == Algorithm::lookback) {
        cfg.lookback_k = j.value("k", cfg.lookback_k);
        cfg.lookback_alpha = j.value("alpha", cfg.lookback_alpha);
        cfg.lookback_mode = parse_lookback_mode(j.value("mode", std::string("softmax")));
    }
    cfg.history_includes_prefix = j.value("history_includes_prefix", cfg.history_includes_prefix);
    cfg.track_signals = j.value("track_signals", cfg.track_signals);
    cfg.summary_top = j.value("summary_top", cfg.summary_top);
    return cfg;
}

nlohmann::json record_to_json(const GenerationRecord& record, const Vocabulary& vocab) {
    nlohmann::json j;
    j["schema"] = kSchema;
    j["backend"] = record.backend;
    j["config"] = config_to_json(record.config);
    j["prefix"] = record.prefix;
    j["prefix_text"] = detokenize(record.prefix, vocab);
    j["continuation"] = record.continuation;
    j["continuation_text"] = detokenize(record.continuation, vocab);
    auto steps = nlohmann::json::array();
    for (std::size_t t = 0; t < record.steps.size(); ++t) {
        const auto& s = record.steps[t];
        nlohmann::json js;
        js["t"] = t;
        js["token"] = s.token;
        js["entropy"] = s.entropy;
        auto top = nlohmann::json::array();
        for (const auto& tp : s.top) top.push_back({tp.id, tp.prob});
        js["top"] = std::move(top);
        js["kl_min_history"] = finite_or_null(s.signals.kl_min_history);
        js["argmin_history"] = s.signals.argmin_history ? nlohmann::json(*s.signals.argmin_history) : nullptr;
        js["kl_min_prefix"] = finite_or_null(s.signals.kl_min_prefix);
        js["alarm"] = s.signals.alarm;
        auto cands = nlohmann::json::array();
        for (const auto& c : s.candidates) {
            cands.push_back({c.id, c.prob, c.lookahead_kl ? finite_or_null(*c.lookahead_kl) : nlohmann::json(nullptr)});
        }
        js["candidates"] = std::move(cands);
        steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    return j;
}

GenerationRecord record_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != kSchema) {
            throw InvalidArgument("unsupported generation record schema '" + j.at("schema").get<std::string>() + "'");
        }
        GenerationRecord rec;
        rec.backend = j.at("backend").get<std::string>();
        rec.config = config_from_json(j.at("config"));
        rec.prefix = j.at("prefix").get<TokenSeq>();
        rec.continuation = j.at("continuation").get<TokenSeq>();
        for (const auto& js : j.at("steps")) {
            StepRecord s;
            s.token = js.at("token").get<TokenId>();
            s.entropy = js.at("entropy").get<double>();
            for (const auto& tp : js.at("top")) s.top.push_back({tp.at(0).get<TokenId>(), tp.at(1).get<double>()});
            s.signals.kl_min_history = number_or_inf(js.at("kl_min_history"));
            if (!js.at("argmin_history").is_null()) s.signals.argmin_history = js.at("argmin_history").get<std::size_t>();
            s.signals.kl_min_prefix = number_or_inf(js.at("kl_min_prefix"));
            s.signals.alarm = js.at("alarm").get<bool>();
            for (const auto& c : js.at("candidates")) {
                Candidate cand{c.at(0).get<TokenId>(), c.at(1).get<double>(), std::nullopt};
                if (!c.at(2).is_null()) cand.lookahead_kl = c.at(2).get<double>();
                s.candidates.push_back(cand);
            }
            rec.steps.push_back(std::move(s));
        }
        if (rec.steps.size() != rec.continuation.size()) {
            throw InvalidArgument("generation record has " + std::to_string(rec.steps.size()) + " steps for " +
                                  std::to_string(rec.continuation.size()) + " tokens");
        }
        return rec;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed generation record: ") + e.what());
    }
}

}  // namespace lookback
