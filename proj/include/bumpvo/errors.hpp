#pragma once

#include <stdexcept>
#include <string>

namespace bumpvo {

// Every failure the library reports derives from Error so callers (the CLI)
// can map families of errors onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `offset` is a byte offset (PGM) or a 1-based line
/// number (TUM, config), whichever the format naturally addresses.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long offset) : Error(what), offset_(offset) {}
    long offset() const noexcept { return offset_; }

private:
    long offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : Error("config key '" + key + "': " + what), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// geometry
class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};
class PoseEstimationFailed : public Error {
public:
    using Error::Error;
};
class AmbiguousPose : public Error {
public:
    using Error::Error;
};
class ScaleLost : public Error {
public:
    using Error::Error;
};

// evaluation
class EmptyAssociation : public Error {
public:
    using Error::Error;
};
class DegenerateAlignment : public Error {
public:
    using Error::Error;
};
class InsufficientOverlap : public Error {
public:
    using Error::Error;
};

}  // namespace bumpvo
