// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace lookback::detail {

struct HttpTarget {
    std::string base;  // scheme://host[:port]
    std::string path;
};

HttpTarget parse_endpoint(const std::string& endpoint);

// POSTs `body` and parses the JSON reply. Transport errors, timeouts and 5xx
// replies are retried `retries` times; other failures are fatal.
nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body, std::chrono::milliseconds timeout,
                         int retries);

}  // namespace lookback::detail
