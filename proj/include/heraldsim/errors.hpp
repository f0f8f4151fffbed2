#pragma once

#include <stdexcept>
#include <string>

namespace heraldsim {

/// Invalid or incomplete configuration (bad key, out-of-range value, wrong topology).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Model precondition violated or the quantity is undefined (e.g. zero heralds).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// The requested evaluation would need an impractical amount of work.
class ResourceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Monte Carlo tally has too few events to estimate the requested quantity.
class EstimationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace heraldsim
