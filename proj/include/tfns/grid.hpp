#pragma once
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "tfns/errors.hpp"
#include "tfns/polyops.hpp"

namespace tfns {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Logarithmic grid in x (uniform in s = ln x) times a periodic uniform grid
// in y.  The quarter-plane (0, inf) x R is truncated to x in [e^s_min, e^s_max]
// and y is replaced by a torus of period y_period.
struct GridSpec {
  double s_min = -12.0;
  double s_max = 6.0;
  int n_s = 257;
  double y_period = kTwoPi;
  int n_y = 64;

  double ds() const { return (s_max - s_min) / (n_s - 1); }
  double dy() const { return y_period / n_y; }
  double s(int i) const { return s_min + i * ds(); }
  double x(int i) const { return std::exp(s(i)); }
  double y(int j) const { return j * dy(); }
  // Signed wavenumber index of spectral column j: k in {-n_y/2+1, ..., n_y/2}.
  int mode_number(int j) const { return j <= n_y / 2 ? j : j - n_y; }
  double eta(int j) const { return kTwoPi * mode_number(j) / y_period; }

  void validate() const;  // throws GridError
  bool operator==(const GridSpec&) const = default;
};

// Real scalar field sampled on the grid, row-major (row = fixed s).
struct Field {
  GridSpec grid;
  double time = 0.0;
  std::vector<double> values;

  Field() = default;
  explicit Field(const GridSpec& g, double t = 0.0)
      : grid(g), time(t), values(static_cast<std::size_t>(g.n_s) * g.n_y, 0.0) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * grid.n_y + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.n_y + j]; }
};

// y-Fourier transform of a Field; rows keep the s index, column j carries the
// signed mode k = mode_number(j).  Unitary normalization (1/sqrt(n_y) each way).
struct SpectralField {
  GridSpec grid;
  double time = 0.0;
  std::vector<std::complex<double>> modes;

  SpectralField() = default;
  explicit SpectralField(const GridSpec& g, double t = 0.0)
      : grid(g), time(t), modes(static_cast<std::size_t>(g.n_s) * g.n_y, {0.0, 0.0}) {}

  std::complex<double>& at(int i, int j) {
    return modes[static_cast<std::size_t>(i) * grid.n_y + j];
  }
  std::complex<double> at(int i, int j) const {
    return modes[static_cast<std::size_t>(i) * grid.n_y + j];
  }
};

template <class Fn>
Field make_field(const GridSpec& g, Fn&& fn, double time = 0.0) {
  Field f(g, time);
  for (int i = 0; i < g.n_s; ++i) {
    const double x = g.x(i);
    for (int j = 0; j < g.n_y; ++j) f.at(i, j) = fn(x, g.y(j));
  }
  return f;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* who);

// ---- arithmetic helpers (allocate fresh outputs; grids must match) ----
Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double c, const Field& a);
Field pointwise_mul(const Field& a, const Field& b);  // raw product, no dealiasing
double max_abs(const Field& f);
bool all_finite(const Field& f);

// ---- scale-invariant derivative operators ----

// d^order/ds^order via 4th-order centered stencils in the interior and
// shifted same-width stencils (accuracy >= 2) near the s-boundaries.
// Requires 1 <= order <= 8 and n_s >= order + 5.
Field apply_Dx(const Field& f, int order);
SpectralField apply_Dx(const SpectralField& f, int order);

// x * d/dy: spectral derivative in y followed by pointwise multiplication by x.
Field apply_Dy(const Field& f);
// Spectral version: multiply mode k of row i by (i eta_k x_i).
SpectralField apply_Dy_spectral(const SpectralField& f);

// sum_j coeff_j Dx^j f.  Requires degree(p) <= 8.
Field apply_poly_op(const RealPolynomial& p, const Field& f);
SpectralField apply_poly_op(const RealPolynomial& p, const SpectralField& f);

// Unitary discrete Fourier transform along y (and inverse; the inverse
// discards the imaginary roundoff residue when writing the real Field).
SpectralField fourier_y(const Field& f);
Field inverse_fourier_y(const SpectralField& f);

// Plain n-th y-derivative (no x factor), computed spectrally.  The unpaired
// Nyquist mode is annihilated for odd n to preserve realness.
Field dy_flat(const Field& f, int n = 1);

// (x d/dy)^n = x^n d^n/dy^n in a single spectral pass.
Field dy_pow(const Field& f, int n);

// 2/3-rule: zero all modes with |k| > n_y/3.
Field dealias_y(const Field& f);

// ---- stencil access (used by the implicit-solver assembly) ----
// Unit-spacing weights for d^m/ds^m over a window of `width` nodes, evaluated
// at window node p: weights[p][t].  For m >= 1 each row sums to exactly zero
// so constants are annihilated to the last bit.  Scale by ds^-m for use.
struct StencilSet {
  int width = 0;
  int halfwidth = 0;
  std::vector<std::vector<double>> weights;
};
const StencilSet& stencil_set(int order);

}  // namespace tfns
