#pragma once
#include <stdexcept>
#include <string>

namespace tfns {

// Base class for recoverable domain errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration or input validation failure (unknown key, bound violation).
struct ConfigError : Error {
  using Error::Error;
};

// Grid construction or stencil precondition violated.
struct GridError : Error {
  using Error::Error;
};

// Least-squares fit on a degenerate window (traces, closure rows).
struct FitError : Error {
  using Error::Error;
};

// 1 + v_x dropped below the configured floor: the coordinate change folds.
struct MarginError : Error {
  using Error::Error;
};

// Linear solve failed to reach the residual target on every available path.
struct SolveError : Error {
  using Error::Error;
};

// Power-series construction near x = 0 rejected its data or failed to
// contract (incompatible right-hand side, radius too large, no convergence).
struct SeriesError : Error {
  using Error::Error;
};

// Height-profile reconstruction or inversion hit a non-monotone sample line
// or a query outside the sampled support.
struct HodographError : Error {
  using Error::Error;
};

// Time stepping produced a non-finite or exploding state.
struct BlowUpError : Error {
  using Error::Error;
};

}  // namespace tfns
