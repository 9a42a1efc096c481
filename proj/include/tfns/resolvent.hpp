#pragma once
#include <vector>

#include "tfns/errors.hpp"
#include "tfns/grid.hpp"
#include "tfns/norms.hpp"

namespace tfns {

// Per-Fourier-mode solver for the stationary equation
//
//   lambda * x * v + q(Dx) v - eta^2 x^2 r(Dx) v + eta^4 x^4 v = f
//
// on the logarithmic s-grid (Dx = d/ds), which is the heart of one implicit
// time step.  The companion power-series construction near x = 0 serves as an
// independent validation oracle for the boundary treatment.

// General real banded matrix, column-band storage: A(i, j) lives at
// bands[(ku + i - j) + j * (kl + ku + 1)] for -ku <= i - j <= kl.
struct BandedMatrix {
  int n = 0;
  int kl = 0;  // sub-diagonals
  int ku = 0;  // super-diagonals
  std::vector<double> bands;

  BandedMatrix() = default;
  BandedMatrix(int n_, int kl_, int ku_)
      : n(n_), kl(kl_), ku(ku_),
        bands(static_cast<std::size_t>(kl_ + ku_ + 1) * n_, 0.0) {}

  bool in_band(int i, int j) const { return i - j <= kl && j - i <= ku; }
  double& at(int i, int j) {
    return bands[static_cast<std::size_t>(j) * (kl + ku + 1) + (ku + i - j)];
  }
  double at(int i, int j) const {
    if (i < 0 || j < 0 || i >= n || j >= n || !in_band(i, j)) return 0.0;
    return bands[static_cast<std::size_t>(j) * (kl + ku + 1) + (ku + i - j)];
  }
  // Columns [row_begin, row_end) of row i that may hold nonzeros.
  int row_begin(int i) const { return i - kl < 0 ? 0 : i - kl; }
  int row_end(int i) const { return i + ku + 1 > n ? n : i + ku + 1; }

  std::vector<double> multiply(const std::vector<double>& v) const;
};

// Assembled and factorized one-mode system.  After assemble() the object is
// immutable; concurrent solve() calls on the same system are safe.
struct ResolventSystem {
  GridSpec grid;
  double eta = 0.0;
  double lambda = 1.0;

  // Original matrix (used for residual checks and the dense fallback).
  BandedMatrix matrix;

  // Row-equilibrated LU factors, L unit-lower within kl, U within ku.
  BandedMatrix factors;
  std::vector<double> row_scale;  // 1 / max-abs of each equilibrated row
  bool banded_factor_ok = false;
  double pivot_ratio = 0.0;  // min |U_kk| / max |U_kk|

  // Closure layout: the 4 lowest rows tie v to a least-squares projection
  // onto span{1, x, x^{1+beta}, x^2} through the next 8 nodes; the 4 highest
  // rows impose homogeneous Dirichlet conditions.
  static constexpr int kClosureRows = 4;
  static constexpr int kClosureWindow = 8;
};

struct SolveReport {
  double residual = 0.0;          // ||A v - f||_inf / ||f||_inf
  bool used_dense_fallback = false;
  // Decay diagnostic: max |v| over the last 8 pre-Dirichlet nodes relative to
  // max |v| overall.  Large values flag an under-resolved right truncation
  // (the eta = 0 mode decays only like exp(-nu x^{1/4})).
  double tail_ratio = 0.0;
};

// Build and factorize the one-mode matrix.  lambda >= 0 is accepted
// (lambda = 0 only for diagnostics; production callers use lambda = 1/dt),
// eta enters through eta^2 and eta^4 only.  Throws ConfigError on bad
// parameters, FitError on a degenerate closure window, SolveError if the
// factorization is effectively singular.
ResolventSystem assemble(const GridSpec& grid, double eta, double lambda);

// Solve A v = f.  The closure rows are constraint rows: their right-hand
// side is forced to zero (projection consistency on the left, homogeneous
// Dirichlet on the right), so only rows 4 .. n-5 of f act as data.  The
// banded solve gets one step of iterative refinement; if its residual still
// exceeds 1e-8 the system is re-solved densely with partial pivoting, and if
// that also fails SolveError is thrown.
Profile solve(const ResolventSystem& sys, const Profile& f,
              SolveReport* report = nullptr);

// Truncated double power series sum_{k,l} a_{kl} x1^k x2^l in the unfolded
// variables (x1, x2) = (x, x^beta), restricted to 0 <= k, l <= N.  Exponent
// k + beta*l = 1 + beta only for (k, l) = (1, 1), so the x^{1+beta}
// coefficient of the restricted series is exactly the a2 slot.
struct SeriesSolution {
  int N = 0;
  double eps = 0.0;  // certified radius in x1
  double a1 = 0.0;   // free data: value at the origin, coeffs(0, 0)
  double a2 = 0.0;   // free data: the (1, 1) monomial slot
  double eta = 0.0;
  std::vector<double> coeffs;  // (N+1) x (N+1), row-major in (k, l)

  // Diagnostics from the fixed-point construction.
  int iterations = 0;
  double final_distance = 0.0;        // last omega-distance between iterates
  double contraction_measured = 0.0;  // max observed distance ratio rho
  double c2_measured = 0.0;           // rho / (eps + eta^2 eps^2 + eta^4 eps^4)

  double coeff(int k, int l) const {
    return coeffs[static_cast<std::size_t>(k) * (N + 1) + l];
  }
  // sum |a_{kl}| eps^{k + beta l}; finite truncation of the analytic-norm
  // series whose geometric decay the contraction factor certifies.
  double omega_norm() const;
  double evaluate(double x) const;
};

// Solve the equation near x = 0 as an analytic double series by fixed-point
// iteration: v = a1 + a2 x1 x2 + T[fbar] + T[-lambda x1 v + eta^2 x1^2 r(D) v
// - eta^4 x1^4 v], where T = T_{-1/2} T_{-beta+1/2} T_0 T_{1+beta} divides
// slot (k, l) by (k + beta l - gamma) and annihilates the two resonant slots
// (0, 0) and (1, 1).  fbar_coeffs is (N+1)^2 row-major like
// SeriesSolution::coeffs.  Compatibility demands fbar(0,0) = 0, the (1,1)
// slot = 0, and (for lambda != 0) the (0,1) slot = 0; violations throw
// SeriesError, as do a contraction estimate >= 1 (eps too large) and
// non-convergence within 200 sweeps.  lambda is the coefficient of the x*v
// term; the convention matching the grid solver at one implicit step of unit
// size is lambda = 1 (the default).
SeriesSolution series_near_zero(const std::vector<double>& fbar_coeffs,
                                double a1, double a2, double eta, int N,
                                double eps, double lambda = 1.0);

// Fundamental solution of (d^2/dx^2 - 1)^2 g = delta_0 on the line:
// g(x) = (1/4) e^{-|x|} (1 + |x|).
double fundamental_g(double x);

// Least-squares slope of ln |v| against x over the window x in [x_lo, x_hi].
// Nodes where |v| underflows (or sits below 1e-290) are skipped; fewer than
// 4 usable nodes raise FitError.
double decay_log_slope(const Profile& v, double x_lo, double x_hi);

}  // namespace tfns
