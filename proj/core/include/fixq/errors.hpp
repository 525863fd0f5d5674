#pragma once

#include <stdexcept>
#include <string>

namespace fixq {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed bundle, manifest or payload; I/O failure.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Violated precondition, invalid codebook or forbidden configuration.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Non-finite input, accumulator overflow, divergent training.
class NumericError : public Error {
public:
    using Error::Error;
};

// Exit codes shared by the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFormat = 2;
inline constexpr int kExitContract = 3;
inline constexpr int kExitNumeric = 4;

int exit_code_for(const Error& e) noexcept;

}  // namespace fixq
