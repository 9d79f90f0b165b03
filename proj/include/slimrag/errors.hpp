#pragma once

#include <stdexcept>
#include <string>

namespace slimrag {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller violated an operation precondition (empty input, out-of-range value, ...).
struct InvalidInput : Error {
    using Error::Error;
};

// Reading or writing a file failed, or the file content is not what it claims to be.
struct IoError : Error {
    using Error::Error;
};

// Index construction failed (duplicate doc_id, empty corpus).
struct BuildError : Error {
    using Error::Error;
};

// Network-level failure (connect/timeout) that survived the retry budget.
struct TransportError : Error {
    TransportError(const std::string& what, int attempts_made)
        : Error(what), attempts(attempts_made) {}
    int attempts = 0;
};

// The server answered with a non-2xx status.
struct ProtocolError : Error {
    ProtocolError(const std::string& what, int status_code, std::string response_body)
        : Error(what), status(status_code), body(std::move(response_body)) {}
    int status = 0;
    std::string body;
};

// The server answered 2xx but the body is not the expected JSON.
struct DecodeError : Error {
    using Error::Error;
};

// A response violates a cross-item consistency guarantee (e.g. mixed embedding dims).
struct IntegrityError : Error {
    using Error::Error;
};

// A prompt template was rendered with a required slot missing.
struct RenderError : Error {
    using Error::Error;
};

// Structured model output did not contain a single extractable unit.
struct ParseError : Error {
    using Error::Error;
};

// The rewriter produced unusable output; carries the raw text for diagnosis.
struct RewriteError : Error {
    RewriteError(const std::string& what, std::string raw)
        : Error(what), raw_output(std::move(raw)) {}
    std::string raw_output;
};

}  // namespace slimrag
