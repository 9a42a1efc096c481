#include "tfns/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

namespace tfns {

void GridSpec::validate() const {
  std::ostringstream err;
  if (!(s_min < s_max))
    err << "s_min (" << s_min << ") must be < s_max (" << s_max << ")";
  else if (n_s < 2)
    err << "n_s must be >= 2, got " << n_s;
  else if (n_y < 2 || n_y % 2 != 0)
    err << "n_y must be even and >= 2, got " << n_y;
  else if (!(y_period > 0.0))
    err << "y_period must be positive, got " << y_period;
  else
    return;
  throw GridError("grid: " + err.str());
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* who) {
  if (!(a == b)) throw GridError(std::string(who) + ": operands live on different grids");
}

Field operator+(const Field& a, const Field& b) {
  require_same_grid(a.grid, b.grid, "field add");
  Field out(a.grid, a.time);
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] = a.values[n] + b.values[n];
  return out;
}

Field operator-(const Field& a, const Field& b) {
  require_same_grid(a.grid, b.grid, "field sub");
  Field out(a.grid, a.time);
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] = a.values[n] - b.values[n];
  return out;
}

Field operator*(double c, const Field& a) {
  Field out(a.grid, a.time);
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] = c * a.values[n];
  return out;
}

Field pointwise_mul(const Field& a, const Field& b) {
  require_same_grid(a.grid, b.grid, "field mul");
  Field out(a.grid, a.time);
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] = a.values[n] * b.values[n];
  return out;
}

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::fabs(v));
  return m;
}

bool all_finite(const Field& f) {
  for (double v : f.values)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Finite-difference stencils (Fornberg weight generation).
// ---------------------------------------------------------------------------
namespace {

// Weights for derivatives 0..m at point z from arbitrary nodes xs.
// Returns C[i][k]: weight of node i for the k-th derivative.
std::vector<std::vector<double>> fornberg(double z, const std::vector<double>& xs, int m) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> C(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - z;
  C[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) C[i][k] = c1 * (k * C[i - 1][k - 1] - c5 * C[i - 1][k]) / c2;
        C[i][0] = -c1 * c5 * C[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) C[j][k] = (c4 * C[j][k] - k * C[j][k - 1]) / c3;
      C[j][0] = c4 * C[j][0] / c3;
    }
    c1 = c2;
  }
  return C;
}

int stencil_halfwidth(int order) { return (order + 1) / 2 + 1; }

StencilSet build_stencil_set(int order) {
  StencilSet st;
  st.halfwidth = stencil_halfwidth(order);
  st.width = 2 * st.halfwidth + 1;
  std::vector<double> nodes(st.width);
  for (int t = 0; t < st.width; ++t) nodes[t] = static_cast<double>(t);
  st.weights.resize(st.width);
  for (int p = 0; p < st.width; ++p) {
    const auto table = fornberg(static_cast<double>(p), nodes, order);
    std::vector<double> w(st.width);
    for (int t = 0; t < st.width; ++t) w[t] = table[t][order];
    // Enforce exact annihilation of constants: replace the last weight by the
    // exact negation of the in-order partial sum of the others, so the
    // left-to-right total is zero to the last bit (perturbation ~1 ulp).
    double partial = 0.0;
    for (int t = 0; t < st.width - 1; ++t) partial += w[t];
    w[st.width - 1] = -partial;
    st.weights[p] = std::move(w);
  }
  return st;
}

std::mutex g_stencil_mutex;

}  // namespace

const StencilSet& stencil_set(int order) {
  if (order < 1 || order > 8) throw GridError("stencil order must be in 1..8");
  std::lock_guard<std::mutex> lk(g_stencil_mutex);
  static std::map<int, StencilSet> cache;
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_stencil_set(order)).first;
  return it->second;
}

namespace {

template <class T>
std::vector<T> apply_dx_values(const GridSpec& g, const std::vector<T>& in, int order) {
  if (order < 1 || order > 8) throw GridError("apply_Dx: order must be in 1..8");
  if (g.n_s < order + 5) throw GridError("apply_Dx: grid too small for requested order");
  const StencilSet& st = stencil_set(order);
  const int n = g.n_s, ny = g.n_y, w = st.width, r = st.halfwidth;
  const double scale = std::pow(g.ds(), -order);
  std::vector<T> out(in.size());
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - r, 0, n - w);
    const auto& wt = st.weights[i - start];
    for (int j = 0; j < ny; ++j) {
      T acc{};
      const std::size_t base = static_cast<std::size_t>(start) * ny + j;
      for (int t = 0; t < w; ++t) acc += wt[t] * in[base + static_cast<std::size_t>(t) * ny];
      out[static_cast<std::size_t>(i) * ny + j] = scale * acc;
    }
  }
  return out;
}

}  // namespace

Field apply_Dx(const Field& f, int order) {
  Field out(f.grid, f.time);
  out.values = apply_dx_values(f.grid, f.values, order);
  return out;
}

SpectralField apply_Dx(const SpectralField& f, int order) {
  SpectralField out(f.grid, f.time);
  out.modes = apply_dx_values(f.grid, f.modes, order);
  return out;
}

Field apply_poly_op(const RealPolynomial& p, const Field& f) {
  if (p.degree() > 8) throw GridError("apply_poly_op: degree must be <= 8");
  Field out = p.coeff(0) * f;
  for (int j = 1; j <= p.degree(); ++j)
    if (p.coeff(j) != 0.0) out = out + p.coeff(j) * apply_Dx(f, j);
  return out;
}

SpectralField apply_poly_op(const RealPolynomial& p, const SpectralField& f) {
  if (p.degree() > 8) throw GridError("apply_poly_op: degree must be <= 8");
  SpectralField out(f.grid, f.time);
  for (std::size_t n = 0; n < f.modes.size(); ++n) out.modes[n] = p.coeff(0) * f.modes[n];
  for (int j = 1; j <= p.degree(); ++j) {
    if (p.coeff(j) == 0.0) continue;
    SpectralField d = apply_Dx(f, j);
    for (std::size_t n = 0; n < f.modes.size(); ++n) out.modes[n] += p.coeff(j) * d.modes[n];
  }
  return out;
}

// ---------------------------------------------------------------------------
// FFT along y (FFTW, cached plans, unitary normalization).
// ---------------------------------------------------------------------------
namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  fftw_complex* buf = nullptr;
  int n = 0;
};

std::mutex g_fft_mutex;

PlanPair& plans_for(int n) {
  static std::map<int, PlanPair> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    PlanPair pp;
    pp.n = n;
    pp.buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    pp.fwd = fftw_plan_dft_1d(n, pp.buf, pp.buf, FFTW_FORWARD, FFTW_ESTIMATE);
    pp.bwd = fftw_plan_dft_1d(n, pp.buf, pp.buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    it = cache.emplace(n, pp).first;
  }
  return it->second;
}

// i^n * eta^n with the exact real/imaginary structure.
std::complex<double> i_pow_eta(double eta, int n) {
  const double p = std::pow(eta, n);
  switch (n & 3) {
    case 0: return {p, 0.0};
    case 1: return {0.0, p};
    case 2: return {-p, 0.0};
    default: return {0.0, -p};
  }
}

}  // namespace

SpectralField fourier_y(const Field& f) {
  SpectralField out(f.grid, f.time);
  const int n = f.grid.n_y;
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  std::lock_guard<std::mutex> lk(g_fft_mutex);
  PlanPair& pp = plans_for(n);
  for (int i = 0; i < f.grid.n_s; ++i) {
    for (int j = 0; j < n; ++j) {
      pp.buf[j][0] = f.at(i, j);
      pp.buf[j][1] = 0.0;
    }
    fftw_execute(pp.fwd);
    for (int j = 0; j < n; ++j) out.at(i, j) = {norm * pp.buf[j][0], norm * pp.buf[j][1]};
  }
  return out;
}

Field inverse_fourier_y(const SpectralField& f) {
  Field out(f.grid, f.time);
  const int n = f.grid.n_y;
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  std::lock_guard<std::mutex> lk(g_fft_mutex);
  PlanPair& pp = plans_for(n);
  for (int i = 0; i < f.grid.n_s; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::complex<double> z = f.at(i, j);
      pp.buf[j][0] = z.real();
      pp.buf[j][1] = z.imag();
    }
    fftw_execute(pp.bwd);
    for (int j = 0; j < n; ++j) out.at(i, j) = norm * pp.buf[j][0];
  }
  return out;
}

SpectralField apply_Dy_spectral(const SpectralField& f) {
  SpectralField out(f.grid, f.time);
  const int n = f.grid.n_y;
  for (int i = 0; i < f.grid.n_s; ++i) {
    const double x = f.grid.x(i);
    for (int j = 0; j < n; ++j) {
      if (j == n / 2) {
        out.at(i, j) = 0.0;  // unpaired Nyquist mode, odd derivative
        continue;
      }
      const std::complex<double> ieta{0.0, f.grid.eta(j)};
      out.at(i, j) = ieta * x * f.at(i, j);
    }
  }
  return out;
}

Field dy_flat(const Field& f, int n) {
  if (n == 0) return f;
  SpectralField F = fourier_y(f);
  const int ny = f.grid.n_y;
  for (int i = 0; i < f.grid.n_s; ++i) {
    for (int j = 0; j < ny; ++j) {
      if ((n & 1) && j == ny / 2) {
        F.at(i, j) = 0.0;
        continue;
      }
      F.at(i, j) *= i_pow_eta(f.grid.eta(j), n);
    }
  }
  return inverse_fourier_y(F);
}

Field dy_pow(const Field& f, int n) {
  if (n == 0) return f;
  Field out = dy_flat(f, n);
  for (int i = 0; i < f.grid.n_s; ++i) {
    const double xp = std::pow(f.grid.x(i), n);
    for (int j = 0; j < f.grid.n_y; ++j) out.at(i, j) *= xp;
  }
  return out;
}

Field apply_Dy(const Field& f) { return dy_pow(f, 1); }

Field dealias_y(const Field& f) {
  SpectralField F = fourier_y(f);
  const int ny = f.grid.n_y;
  const int kmax = ny / 3;
  for (int i = 0; i < f.grid.n_s; ++i)
    for (int j = 0; j < ny; ++j)
      if (std::abs(f.grid.mode_number(j)) > kmax) F.at(i, j) = 0.0;
  return inverse_fourier_y(F);
}

}  // namespace tfns
