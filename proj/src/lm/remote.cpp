// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/remote.hpp"

#include <cmath>
#include <vector>

#include <httplib.h>

#include "http_json.hpp"
#include "lookback/error.hpp"

namespace lookback {

namespace detail {

HttpTarget parse_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos || endpoint.compare(0, scheme_end, "http") != 0) {
        throw InvalidArgument("endpoint must be an http:// URL, got '" + endpoint + "'");
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    HttpTarget t;
    if (path_start == std::string::npos) {
        t.base = endpoint;
        t.path = "/";
    } else {
        t.base = endpoint.substr(0, path_start);
        t.path = endpoint.substr(path_start);
    }
    if (t.base.size() <= scheme_end + 3) throw InvalidArgument("endpoint has no host: '" + endpoint + "'");
    return t;
}

nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body, std::chrono::milliseconds timeout,
                         int retries) {
    auto target = parse_endpoint(endpoint);
    const int attempts = 1 + std::max(retries, 0);
    const auto payload = body.dump();
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Client client(target.base);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto res = client.Post(target.path, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError(endpoint + ": HTTP " + std::to_string(res->status), false, attempt);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw BackendError(endpoint + ": malformed JSON reply: " + e.what(), false, attempt);
        }
    }
    throw BackendError(endpoint + ": request failed after " + std::to_string(attempts) + " attempt(s): " + last_error,
                       true, attempts);
}

}  // namespace detail

ProbDist complete_logprobs(std::span<const LogProb> listed, std::size_t vocab_size) {
    std::vector<double> p(vocab_size, 0.0);
    std::vector<bool> seen(vocab_size, false);
    double mass = 0.0;
    for (const auto& lp : listed) {
        if (lp.id >= vocab_size) {
            throw BackendError("logprob for token id " + std::to_string(lp.id) + " outside vocabulary", false);
        }
        if (seen[lp.id]) throw BackendError("duplicate logprob for token id " + std::to_string(lp.id), false);
        if (std::isnan(lp.logprob)) throw BackendError("NaN logprob", false);
        seen[lp.id] = true;
        p[lp.id] = std::exp(lp.logprob);
        mass += p[lp.id];
    }
    const double tail = 1.0 - mass;
    if (tail < -1e-6) {
        throw BackendError("inconsistent server: listed probability mass " + std::to_string(mass) + " exceeds 1",
                           false);
    }
    const std::size_t unlisted = vocab_size - listed.size();
    if (unlisted > 0 && tail > 0.0) {
        const double share = tail / static_cast<double>(unlisted);
        for (std::size_t i = 0; i < vocab_size; ++i) {
            if (!seen[i]) p[i] = share;
        }
    }
    try {
        return dist_normalize(p);
    } catch (const InvalidArgument& e) {
        throw BackendError(std::string("unusable logprobs: ") + e.what(), false);
    }
}

ProbDist remote_next_dist(const RemoteLMConfig& cfg, std::size_t vocab_size, std::span<const TokenId> context) {
    if (cfg.top_n < 1) throw InvalidArgument("top_n must be >= 1");
    nlohmann::json body;
    body["context"] = std::vector<TokenId>(context.begin(), context.end());
    body["top_n"] = cfg.top_n;
    auto reply = detail::post_json(cfg.endpoint, body, cfg.timeout, cfg.retries);

    std::vector<LogProb> listed;
    try {
        const auto& arr = reply.at("logprobs");
        if (!arr.is_array()) throw BackendError(cfg.endpoint + ": 'logprobs' is not an array", false);
        for (const auto& pair : arr) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number()) {
                throw BackendError(cfg.endpoint + ": malformed logprob entry " + pair.dump(), false);
            }
            auto id = pair[0].get<std::int64_t>();
            if (id < 0) throw BackendError(cfg.endpoint + ": negative token id", false);
            listed.push_back({static_cast<TokenId>(id), pair[1].get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(cfg.endpoint + ": malformed reply: " + e.what(), false);
    }
    return complete_logprobs(listed, vocab_size);
}

RemoteLM::RemoteLM(Vocabulary vocab, RemoteLMConfig cfg) : vocab_(std::move(vocab)), cfg_(std::move(cfg)) {
    if (cfg_.top_n < 1) throw InvalidArgument("top_n must be >= 1");
    detail::parse_endpoint(cfg_.endpoint);
}

ProbDist RemoteLM::next_dist(std::span<const TokenId> context) const {
    return remote_next_dist(cfg_, vocab_.size(), context);
}

}  // namespace lookback
