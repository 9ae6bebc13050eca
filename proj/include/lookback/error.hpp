// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lookback {

enum class ErrorCode {
    invalid_argument = 1,
    io = 2,
    format = 3,
    backend_retryable = 4,
    backend_fatal = 5,
    internal = 6,
};

// Base of every error thrown by the library. The C API maps `code()` onto its
// status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

// Malformed persisted data. `offset` is the byte position where decoding
// stopped making sense.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(ErrorCode::format, what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class BackendError : public Error {
public:
    BackendError(const std::string& what, bool retryable, int attempts = 0)
        : Error(retryable ? ErrorCode::backend_retryable : ErrorCode::backend_fatal, what),
          attempts_(attempts) {}
    bool retryable() const noexcept { return code() == ErrorCode::backend_retryable; }
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

}  // namespace lookback
