#pragma once

#include <stdexcept>
#include <string>

namespace soprag {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: canonical schema lines, LLM responses, index files.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Remote backend failure (HTTP transport or protocol-level).
class BackendError : public Error {
public:
    using Error::Error;
};

/// Configuration or manifest inconsistency (version, embedding dim, missing endpoint).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace soprag
