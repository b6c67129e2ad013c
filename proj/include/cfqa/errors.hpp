#pragma once

#include <stdexcept>
#include <string>

namespace cfqa {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input document (bad JSON, wrong type, missing field).
struct ParseError : Error {
    using Error::Error;
};

// Structurally well-formed input that violates a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Invalid invocation or configuration (maps to CLI exit code 2).
struct UsageError : Error {
    using Error::Error;
};

// Backend transport failure (connection refused, 5xx). Retryable.
struct TransportError : Error {
    using Error::Error;
};

// Strict mock got a request it has no fixture for. Not retryable.
struct FixtureMissError : Error {
    FixtureMissError(const std::string& msg, std::string digest_)
        : Error(msg), digest(std::move(digest_)) {}
    std::string digest;
};

// Backend kept returning text that never parsed as the demanded JSON.
struct MalformedOutputError : Error {
    MalformedOutputError(const std::string& msg, std::string last_text_, int attempts_)
        : Error(msg), last_text(std::move(last_text_)), attempts(attempts_) {}
    std::string last_text;
    int attempts = 0;
};

// Gave up on a backend call (retries exhausted, hard HTTP error).
struct GatewayError : Error {
    using Error::Error;
};

// One video's causal-discovery run failed; other videos are unaffected.
struct DiscoveryError : Error {
    using Error::Error;
};

// Question generation failed for one video.
struct GenerationError : Error {
    using Error::Error;
};

// Claim extraction from a model output failed.
struct ExtractionError : Error {
    using Error::Error;
};

// Prediction scoring / report building failed.
struct EvalError : Error {
    using Error::Error;
};

}  // namespace cfqa
