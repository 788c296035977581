#pragma once

#include <stdexcept>
#include <string>

namespace hybridqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, empty corpora, violated preconditions.
class DataError : public Error {
public:
    using Error::Error;
};

/// A remote provider could not be reached or answered with a transport-level failure.
/// These are safe to retry.
class ProviderError : public Error {
public:
    using Error::Error;
    bool retryable() const noexcept { return true; }
};

/// A provider answered, but the answer violates the wire contract
/// (wrong vector count, wrong dimension, missing fields). Never retried.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A request that cannot be honoured as given, such as a command needing a live
/// provider in offline mode.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace hybridqa
