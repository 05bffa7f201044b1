#pragma once

#include <stdexcept>
#include <string>

namespace btd {

/// Base class of every numerical failure raised by the library. The CLI maps
/// these to exit code 2; std::invalid_argument (bad shapes, bad flags) maps to 1.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A factor matrix that should have full column rank does not.
class RankDeficientError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// The two blocks share (almost) a common direction in some mode, so the
/// principal-angle cosines sigma reach 1 and the blocks cannot be separated.
class DegenerateOverlapError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// A 2x2x2 core has no real rank-2 decomposition (complex pencil eigenvalues).
class DegenerateCoreError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// A core whose rank-2 decomposition is not unique (singular or defective pencil).
class NonIdentifiableError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace btd
