#pragma once

#include <stdexcept>
#include <string>

namespace gmae {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or dimensionality mismatch between operands.
struct DimError : Error {
  using Error::Error;
};

// Input outside an operation's mathematical domain (log of a nonpositive
// value, cosine of a zero-norm row).
struct DomainError : Error {
  using Error::Error;
};

// Invalid, unknown, or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

// API misuse: bad node ids, empty inputs, calls in the wrong state.
struct ContractError : Error {
  using Error::Error;
};

// File access or parse failure during ingestion or persistence.
struct IoError : Error {
  using Error::Error;
};

// Training-time failure, e.g. a loss that stopped being finite.
struct TrainError : Error {
  using Error::Error;
};

}  // namespace gmae
