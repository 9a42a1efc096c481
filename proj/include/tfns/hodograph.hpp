#pragma once
#include <vector>

#include "tfns/grid.hpp"
#include "tfns/nonlinearity.hpp"
#include "tfns/norms.hpp"

namespace tfns {

// Traveling-wave film height: x^{3/2} on x > 0, zero on the dry side.
// Satisfies H * H''' = -3/8 on its support and a zero contact angle at 0.
double traveling_wave_H(double x);

// Physical-space film height sampled along the moving-frame grid: one z-line
// per y-node (z_at(j, i) = x_i - (3/8) t + v(x_i, y_j)) sharing the height
// samples h[i] = x_i^{3/2}.  z0[j] is the contact point of line j; the height
// is zero at and left of it and strictly increasing right of it.
struct HeightProfile {
  GridSpec grid;
  double time = 0.0;
  std::vector<double> h;   // n_s entries, h[i] = x_i^{3/2}
  std::vector<double> z;   // n_y * n_s, line-major
  std::vector<double> z0;  // n_y contact points

  double& z_at(int j, int i) { return z[static_cast<std::size_t>(j) * grid.n_s + i]; }
  double z_at(int j, int i) const { return z[static_cast<std::size_t>(j) * grid.n_s + i]; }
};

// Graph -> height: emits (Z, h) = (x - (3/8) t + v, x^{3/2}) per y-line, with
// t = v.time.  The contact point comes from the boundary-trace fit,
// z0 = -(3/8) t + v0(y).  Enforces the gradient margin (MarginError) and
// strict per-line monotonicity of z (HodographError).
HeightProfile h_from_v(const Field& v, const NonlinOptions& opt = {});

// Height -> graph: solves h(t, y, Z) = x^{3/2} for Z on the target grid by
// monotone piecewise-cubic interpolation and returns v = Z - x + (3/8) t with
// t = p.time.  Works in the variable w = h^{2/3}, which equals x on the data
// and keeps the interpolant regular at the contact point.  Throws
// HodographError on non-monotone lines or queries outside the sampled span.
Field v_from_h(const HeightProfile& p, const GridSpec& target);
Field v_from_h(const HeightProfile& p);  // target = p.grid

// Spectral d^order/dy^order of a periodic sample vector (unpaired Nyquist
// mode annihilated for odd orders).
std::vector<double> trace_dy(const std::vector<double>& values, double y_period, int order = 1);

// Leading advection velocity of the contact line, per y-node:
//   V0 = -(3/8) (1 + (v0_y)^2) / (1 + v1)^3 * (-v0_y, 1),
// with v0_y computed spectrally from the v0 trace.  MarginError when 1 + v1
// is not positive.
struct ContactVelocity {
  std::vector<double> vy, vz;
};
ContactVelocity contact_velocity(const TraceSet& traces, double y_period = kTwoPi);

// Near-contact expansion of the advection velocity and of the scalar P in
//   V = (3/2) (D_y - G (Dx - 1/2), F (Dx - 1/2))^T P,
//   P = -D_y G + G (Dx + 1/2) G + F (Dx + 1/2) F,
// through orders {1, x^beta, x}.  Closed forms are evaluated from the
// boundary traces; the numeric_* members hold the same coefficients fitted
// from the P field assembled out of the actual F and G (an independent path),
// so the two can be compared order by order.
struct VelocityExpansion {
  ContactVelocity V0;                 // order-1 velocity (V_beta vanishes identically)
  std::vector<double> V1y, V1z;       // order-x velocity coefficients
  std::vector<double> P0, Pbeta, P1;  // closed-form P coefficients
  std::vector<double> numeric_P0, numeric_Pbeta, numeric_P1;
  double trace_residual = 0.0;  // RMS misfit of the boundary-trace fit
  double p_fit_residual = 0.0;  // max RMS misfit of the numeric-P fit
};
VelocityExpansion velocity_expansion(const Field& v, const NonlinOptions& opt = {});

// Coefficients of h = c32 zt^{3/2} + c32b zt^{3/2+beta} + c52 zt^{5/2} + ...
// in the distance zt to the contact point, per y-node:
//   ((1+v1)^{-3/2}, -(3/2) v1beta (1+v1)^{-(5/2+beta)}, -(3/2) v2 (1+v1)^{-7/2}).
// MarginError when 1 + v1 is not positive.
struct HExpansion {
  std::vector<double> c32, c32b, c52;
};
HExpansion h_expansion(const TraceSet& traces);

}  // namespace tfns
