#pragma once

#include <stdexcept>
#include <string>

namespace jarz {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or value-domain violations of inputs: dimension mismatch, non-binary
// entries, malformed configuration or data files.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The request is well-formed but outside what the operation supports, e.g.
// exact sampling of a coupled RBM or enumerating a too-large state space.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite energies, increments or gradients, and weight collapse.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeights : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace jarz
