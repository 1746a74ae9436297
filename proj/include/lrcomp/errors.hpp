#ifndef LRCOMP_ERRORS_HPP
#define LRCOMP_ERRORS_HPP

#include <stdexcept>
#include <string>

/**
 * @file errors.hpp
 *
 * @brief Exception hierarchy shared by all lrcomp modules.
 *
 * Each class maps to one failure category so that callers (in particular the CLI)
 * can translate failures into distinct exit codes.
 */

namespace lrcomp {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data (negative counts, bad row sums, ragged tables).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Invalid tuning or solver parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mathematically undefined evaluation, e.g. a log of zero on a positive count.
class DomainError : public Error {
public:
    using Error::Error;
};

/// SVD failure, non-finite objective or runaway line search.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The synthetic generator could not produce a valid instance.
class GenerationError : public Error {
public:
    using Error::Error;
};

}

#endif
