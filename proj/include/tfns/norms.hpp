#pragma once
#include <array>
#include <vector>

#include "tfns/grid.hpp"
#include "tfns/polyops.hpp"

namespace tfns {

// 1-D profile on a uniform s-grid (s = ln x).
struct Profile {
  double s_min = 0.0;
  double ds = 0.0;
  std::vector<double> values;

  int n() const { return static_cast<int>(values.size()); }
  double s(int i) const { return s_min + i * ds; }
  double x(int i) const { return std::exp(s(i)); }
};

template <class Fn>
Profile make_profile(double s_min, double s_max, int n, Fn&& fn) {
  Profile p;
  p.s_min = s_min;
  p.ds = (s_max - s_min) / (n - 1);
  p.values.resize(n);
  for (int i = 0; i < n; ++i) p.values[i] = fn(p.x(i));
  return p;
}

// d^order/ds^order of a profile with the same stencils the 2-D operators use.
Profile dx_profile(const Profile& f, int order);
// sum_j coeff_j Dx^j f for profiles; degree <= 8.
Profile apply_poly_profile(const RealPolynomial& p, const Profile& f);

// (f, g)_alpha = integral of x^{-2 alpha} f g dx/x, trapezoid in s.
double inner_product_alpha(const Profile& f, const Profile& g, double alpha);

// |f|^2_{k,alpha} in one space dimension: sum_{j<=k} (Dx^j f, Dx^j f)_alpha.
double sobolev_sq_1d(const Profile& f, int k, double alpha);

// ---- 2-D weighted Sobolev norms ----
struct NormSpec {
  int k = 0;
  double alpha = 0.0;
};

// sqrt of sum_{lx+ly<=k} integral x^{-2 alpha} (Dy^ly Dx^lx f)^2 x^{-2} dx dy,
// trapezoid in s, exact periodic sum in y.  Enforces k <= 8 (direct stencils).
double weighted_norm_2d(const Field& f, const NormSpec& spec);

// Same square without the k-cap: orders above 8 are reached by composing
// first derivatives on top of the direct order-8 stencil.
double sobolev_sq(const Field& f, int k, double alpha);

// ---- composite norms ----
struct NormParams {
  int k = 19;
  int k_tilde = 13;
  int k_check = 13;
  int k_breve = 4;
  double delta = 0.0;  // 0 means: use default_delta()

  double effective_delta() const;
};

// (beta - 1/2) / 4, the center of the admissible delta range (0, (beta-1/2)/2].
double default_delta();

// Throws ConfigError naming the violated bound.  The derivative-count bounds
// are checked only when strict; the delta range is checked always.
void validate_norm_params(const NormParams& p, bool strict);

// Six-addend initial-data norm.
double norm_init(const Field& f, const NormParams& p, bool strict = false);
std::array<double, 6> norm_init_addends(const Field& f, const NormParams& p);

// Per-time-slice integrand (sum of squared addends) of the right-hand-side
// time-integral norm; the simulator accumulates these by trapezoid in t.
double norm_rhs_contribution(const Field& f, const NormParams& p);
std::array<double, 6> norm_rhs_addends(const Field& f, const NormParams& p);

// Per-time-slice integrand of the solution norm; time derivatives are the
// backward difference (v - v_prev)/dt, matching the stepper.
double norm_sol_contribution(const Field& v, const Field& v_prev, double dt, const NormParams& p);
std::array<double, 12> norm_sol_addends(const Field& v, const Field& v_prev, double dt,
                                        const NormParams& p);

// ---- boundary traces ----
struct TraceSet {
  std::vector<double> v0, v1, v1beta, v2;  // one entry per y-node
  double fit_residual = 0.0;               // max over y of the RMS misfit
};

struct FitWindow {
  double s_lo = 0.0;
  double s_hi = 0.0;
};

// Per-y-column least squares against {1, x, x^{1+beta}, x^2} over the window.
// Requires >= 8 points in the window and the window inside the lower quarter
// of the s-range; scaled condition number > 1e10 raises FitError.
TraceSet extract_traces(const Field& f, const FitWindow& window);
// Default window: the lowest 16 s-points.
TraceSet extract_traces(const Field& f);

// |f|_{1,rho} / |(Dx - gamma) f|_rho; throws on a vanishing denominator.
double hardy_ratio(const Profile& f, double gamma, double rho);

}  // namespace tfns
