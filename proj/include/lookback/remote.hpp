// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lookback/lm.hpp"

namespace lookback {

struct RemoteLMConfig {
    // http://host[:port]/path
    std::string endpoint;
    int top_n = 20;
    std::chrono::milliseconds timeout{10000};
    // Extra attempts after the first failed one.
    int retries = 2;
    bool accepts_empty_context = true;
};

struct LogProb {
    TokenId id;
    double logprob;
};

// Completes a truncated top-n listing into a full distribution: listed
// tokens get exp(logprob), the remaining mass is spread uniformly over the
// unlisted ids. Throws BackendError (fatal) on duplicate/out-of-range ids or
// when the listed mass exceeds one.
ProbDist complete_logprobs(std::span<const LogProb> listed, std::size_t vocab_size);

// One round trip against the wire protocol
//   POST {"context": [ids], "top_n": n}  ->  {"logprobs": [[id, logprob], ...]}
// Network failures and timeouts are retried; once retries are exhausted the
// BackendError names the endpoint and the attempt count.
ProbDist remote_next_dist(const RemoteLMConfig& cfg, std::size_t vocab_size, std::span<const TokenId> context);

// Log-prob server client. Holds no per-request state, so concurrent calls are
// independent.
class RemoteLM final : public ConditionalLM {
public:
    RemoteLM(Vocabulary vocab, RemoteLMConfig cfg);

    const Vocabulary& vocab() const override { return vocab_; }
    ProbDist next_dist(std::span<const TokenId> context) const override;
    bool accepts_empty_context() const override { return cfg_.accepts_empty_context; }
    std::string backend_id() const override { return "remote(" + cfg_.endpoint + ")"; }
    const RemoteLMConfig& config() const noexcept { return cfg_; }

private:
    Vocabulary vocab_;
    RemoteLMConfig cfg_;
};

}  // namespace lookback
