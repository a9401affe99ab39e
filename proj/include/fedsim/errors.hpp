#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Base class for all library errors so callers can catch fedsim::Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a Gram matrix pivot collapses, i.e. the sample rows are
// (numerically) linearly dependent and the interpolating solve is ill-posed.
struct RankDeficientError : Error {
  using Error::Error;
};

// Dimension mismatch between operands, or a matrix in the wrong orientation
// (the library requires n_rows <= n_cols everywhere it factorizes).
struct DimensionError : Error {
  using Error::Error;
};

// A partition step left some node without samples.
struct EmptyNodeError : Error {
  using Error::Error;
};

// Gradient descent blew up (loss grew 10x over its starting value).
struct DivergedError : Error {
  DivergedError(const std::string& what, long round_, long node_, long step_)
      : Error(what), round(round_), node(node_), step(step_) {}
  long round = -1;
  long node = -1;
  long step = -1;
};

// A direction was requested from a (numerically) zero vector.
struct ZeroVectorError : Error {
  using Error::Error;
};

// Ground-truth weights were requested from a dataset that has none.
struct MissingTruthError : Error {
  using Error::Error;
};

// A projection solve stopped without a KKT certificate.
struct SolverError : Error {
  SolverError(const std::string& what, long node_, long round_)
      : Error(what), node(node_), round(round_) {}
  long node = -1;
  long round = -1;
};

// Bad configuration (unknown experiment name, invalid schedule, ...).
struct ConfigError : Error {
  using Error::Error;
};

// File could not be read/written or has an unexpected layout.
struct IoError : Error {
  using Error::Error;
};

}  // namespace fedsim
