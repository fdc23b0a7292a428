#pragma once

#include <stdexcept>
#include <string>

namespace rarf {

/// Error categories surfaced one-per-line by the CLI as
/// `error: <category>: <message>`.
enum class ErrorKind {
    Config,   // invalid configuration values or files
    Parse,    // malformed input data
    Io,       // filesystem / serialization failures
    Invalid,  // bad arguments to an operation
    Internal, // broken invariants
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    const char* kind_name() const {
        switch (kind_) {
            case ErrorKind::Config: return "config";
            case ErrorKind::Parse: return "parse";
            case ErrorKind::Io: return "io";
            case ErrorKind::Invalid: return "invalid";
            case ErrorKind::Internal: return "internal";
        }
        return "unknown";
    }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& msg) { return Error(ErrorKind::Config, msg); }
inline Error parse_error(const std::string& msg) { return Error(ErrorKind::Parse, msg); }
inline Error io_error(const std::string& msg) { return Error(ErrorKind::Io, msg); }
inline Error invalid_error(const std::string& msg) { return Error(ErrorKind::Invalid, msg); }
inline Error internal_error(const std::string& msg) { return Error(ErrorKind::Internal, msg); }

} // namespace rarf
