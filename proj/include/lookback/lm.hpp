// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lookback/core.hpp"

namespace lookback {

// Conditional language model p(. | context). Implementations must be pure:
// equal contexts give elementwise-equal distributions, and concurrent calls
// from several threads are allowed.
class ConditionalLM {
public:
    virtual ~ConditionalLM() = default;

    virtual const Vocabulary& vocab() const = 0;
    virtual ProbDist next_dist(std::span<const TokenId> context) const = 0;

    // Fixed-dimension vector describing `context`, used by contrastive
    // search. Backends without one return nullopt.
    virtual std::optional<std::vector<double>> representation(std::span<const TokenId> context) const {
        (void)context;
        return std::nullopt;
    }

    // Some remote backends reject an empty context; prefix tracking then
    // starts from the first non-empty prefix.
    virtual bool accepts_empty_context() const { return true; }

    virtual std::string backend_id() const = 0;
};

}  // namespace lookback
