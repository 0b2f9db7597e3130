#pragma once

#include <stdexcept>
#include <string>

namespace toolgrade {

// Base class for all toolgrade errors. Subclasses map onto the CLI
// exit-code contract: ConfigError -> 1, DataError -> 2, UpstreamError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad usage, bad configuration, missing paths.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

// Judge/runner transport failures, replay misses.
class UpstreamError : public Error {
public:
    using Error::Error;
};

// A replay-mode lookup found no transcript entry. Carries the digest so the
// caller can report exactly which request is missing.
class ReplayMiss : public UpstreamError {
public:
    explicit ReplayMiss(std::string digest)
        : UpstreamError("replay miss for digest " + digest), digest_(std::move(digest)) {}

    const std::string& digest() const noexcept { return digest_; }

private:
    std::string digest_;
};

// Judge output did not match the expected marker grammar. Callers record the
// affected instance as indeterminate instead of guessing a verdict.
class ParseFailure : public Error {
public:
    using Error::Error;
};

}  // namespace toolgrade
