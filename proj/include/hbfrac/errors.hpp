#pragma once

#include <stdexcept>
#include <string>

namespace hbfrac {

/// Parameter outside the admissible domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The requested discretization cannot resolve the requested quantity.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation was called outside its contract (wrong regime, incompatible grids, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A numerical routine produced a non-finite or otherwise unusable value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or expression text.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hbfrac
