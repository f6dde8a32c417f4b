#pragma once

#include <stdexcept>
#include <string>

namespace ctt {

/// Raised when a numerical kernel fails (non-convergence, non-finite data,
/// unrecoverable ill-conditioning).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a feature basis lacks a function an encoder needs.
class UnsupportedBasis : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

[[noreturn]] inline void argument_error(const std::string& what) {
    throw std::invalid_argument(what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) argument_error(what);
}

}  // namespace ctt
