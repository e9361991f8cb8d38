#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nsar {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated a documented precondition (bad range, mismatched dims, ...).
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// A registry lookup failed (unknown template id, unknown grouping, ...).
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// A filler corpus was empty or otherwise unable to supply text.
class CorpusExhaustedError : public Error {
public:
    using Error::Error;
};

/// An embedding provider failed. `transient` marks failures worth retrying.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, bool transient)
        : Error(what), transient_(transient) {}
    bool transient() const { return transient_; }

private:
    bool transient_;
};

/// All retries against a chat endpoint were exhausted (or the connection died).
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_ = 1;
};

/// The endpoint rejected the request with a non-retryable status.
class RequestError : public Error {
public:
    RequestError(const std::string& what, int status)
        : Error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_ = 0;
};

/// A scripted client ran out of queued responses.
class ScriptExhaustedError : public Error {
public:
    using Error::Error;
};

/// Malformed input to one of the text parsers. Positions are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what), line_(line), column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// A FACT line did not carry exactly three terms.
class ArityError : public ParseError {
public:
    ArityError(const std::string& what, std::size_t line, std::size_t column,
               std::size_t arity)
        : ParseError(what, line, column), arity_(arity) {}
    std::size_t arity() const { return arity_; }

private:
    std::size_t arity_;
};

/// A program used a construct outside the supported subset.
class UnsupportedConstructError : public ParseError {
public:
    UnsupportedConstructError(const std::string& construct, std::size_t line,
                              std::size_t column)
        : ParseError("unsupported construct: " + construct, line, column),
          construct_(construct) {}
    const std::string& construct() const { return construct_; }

private:
    std::string construct_;
};

}  // namespace nsar
