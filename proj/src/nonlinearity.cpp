#include "tfns/nonlinearity.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tfns {

namespace {

Field mul(const Field& a, const Field& b, bool dealias) {
  Field out = pointwise_mul(a, b);
  return dealias ? dealias_y(out) : out;
}

Field dx_shift(const Field& h, double c) { return apply_poly_op(RealPolynomial({c, 1.0}), h); }

Field scale_by_x(const Field& h, double factor) {
  Field out = h;
  for (int i = 0; i < out.grid.n_s; ++i) {
    const double c = factor * out.grid.x(i);
    for (int j = 0; j < out.grid.n_y; ++j) out.at(i, j) *= c;
  }
  return out;
}

// FG data plus the exact reciprocal 1 + v_x and the two B-fields of the
// factored operator.
struct Parts {
  FGPair fg;
  Field f_inv;  // 1 + v_x
  Field b1;     // Dy G
  Field b2;     // G (Dx+1/2) G + F (Dx+1/2) F
};

Parts make_parts(const Field& v, const NonlinOptions& opt) {
  const GridSpec& g = v.grid;
  const Field dxv = apply_Dx(v, 1);

  Parts p;
  p.f_inv = Field(g, v.time);
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.n_s; ++i) {
    const double inv_x = 1.0 / g.x(i);
    for (int j = 0; j < g.n_y; ++j) {
      const double one_plus = 1.0 + dxv.at(i, j) * inv_x;
      p.f_inv.at(i, j) = one_plus;
      margin = std::min(margin, one_plus);
    }
  }
  p.fg.margin = margin;
  if (!(margin > opt.margin_floor)) {
    std::ostringstream err;
    err << "gradient too large for the coordinate transform: min(1 + v_x) = " << margin
        << " <= margin floor " << opt.margin_floor;
    throw MarginError(err.str());
  }

  p.fg.F = Field(g, v.time);
  for (std::size_t n = 0; n < p.fg.F.values.size(); ++n)
    p.fg.F.values[n] = 1.0 / p.f_inv.values[n];
  p.fg.G = mul(dy_flat(v, 1), p.fg.F, opt.dealias);

  p.b1 = apply_Dy(p.fg.G);
  p.b2 = mul(p.fg.G, dx_shift(p.fg.G, 0.5), opt.dealias) +
         mul(p.fg.F, dx_shift(p.fg.F, 0.5), opt.dealias);
  return p;
}

// A1 = Dy^2 - Dy G (Dx-1/2) - G Dy (Dx+3/2), applied to h
Field apply_A1(const Parts& p, const Field& h, bool deal) {
  Field out = dy_pow(h, 2);
  out = out - apply_Dy(mul(p.fg.G, dx_shift(h, -0.5), deal));
  out = out - mul(p.fg.G, apply_Dy(dx_shift(h, 1.5)), deal);
  return out;
}

// A2 = G (Dx+3/2) G (Dx-1/2) + F (Dx+3/2) F (Dx-1/2), applied to h
Field apply_A2(const Parts& p, const Field& h, bool deal) {
  const Field gb = mul(p.fg.G, dx_shift(mul(p.fg.G, dx_shift(h, -0.5), deal), 1.5), deal);
  const Field fb = mul(p.fg.F, dx_shift(mul(p.fg.F, dx_shift(h, -0.5), deal), 1.5), deal);
  return gb + fb;
}

}  // namespace

FGPair compute_FG(const Field& v, const NonlinOptions& opt) {
  return make_parts(v, opt).fg;
}

Field quadlinear_M(const Field& h1, const Field& h2, const Field& h3, const Field& h4,
                   bool dealias) {
  require_same_grid(h1.grid, h2.grid, "quadlinear_M");
  require_same_grid(h1.grid, h3.grid, "quadlinear_M");
  require_same_grid(h1.grid, h4.grid, "quadlinear_M");
  Field t = mul(h3, dx_shift(h4, 0.5), dealias);
  t = mul(h2, dx_shift(t, -0.5), dealias);
  t = mul(h1, dx_shift(t, 1.5), dealias);
  return scale_by_x(t, 1.0);
}

Field transformed_spatial(const Field& v, const NonlinOptions& opt) {
  const Parts p = make_parts(v, opt);
  const Field b = p.b1 - p.b2;
  const Field ab = apply_A1(p, b, opt.dealias) + apply_A2(p, b, opt.dealias);
  return mul(p.f_inv, ab, opt.dealias);
}

Field linear_op(const Field& v) {
  static const RealPolynomial q = make_symbol(Symbol::q);
  static const RealPolynomial r = make_symbol(Symbol::r);
  return apply_poly_op(q, v) + dy_pow(apply_poly_op(r, v), 2) + dy_pow(v, 4);
}

SpectralField linear_op(const SpectralField& v) {
  static const RealPolynomial q = make_symbol(Symbol::q);
  static const RealPolynomial r = make_symbol(Symbol::r);
  const GridSpec& g = v.grid;
  SpectralField out = apply_poly_op(q, v);
  const SpectralField rv = apply_poly_op(r, v);
  for (int i = 0; i < g.n_s; ++i) {
    const double x2 = g.x(i) * g.x(i);
    for (int j = 0; j < g.n_y; ++j) {
      const double e2 = g.eta(j) * g.eta(j);
      out.at(i, j) += (-e2 * x2) * rv.at(i, j) + (e2 * e2 * x2 * x2) * v.at(i, j);
    }
  }
  return out;
}

Field nonlin_N(const Field& v, const NonlinOptions& opt) {
  const Field ts = transformed_spatial(v, opt);
  Field out = linear_op(v);
  const GridSpec& g = v.grid;
  for (int i = 0; i < g.n_s; ++i) {
    const double x = g.x(i);
    for (int j = 0; j < g.n_y; ++j) out.at(i, j) += x * (0.375 - ts.at(i, j));
  }
  return out;
}

std::pair<Field, Field> nonlin_N_split(const Field& v, const NonlinOptions& opt) {
  static const RealPolynomial q = make_symbol(Symbol::q);
  static const RealPolynomial r = make_symbol(Symbol::r);
  const bool deal = opt.dealias;
  const Parts p = make_parts(v, opt);
  const GridSpec& g = v.grid;

  // N1 = -x F^{-1} (A1 B1 + A2 B1 - A1 B2) + Dy^2 r(Dx) v + Dy^4 v
  const Field a_combo =
      apply_A1(p, p.b1, deal) + apply_A2(p, p.b1, deal) - apply_A1(p, p.b2, deal);
  Field n1 = scale_by_x(mul(p.f_inv, a_combo, deal), -1.0);
  n1 = n1 + dy_pow(apply_poly_op(r, v), 2) + dy_pow(v, 4);

  // N2 = M(1,F,F,F) + M(F^{-1}G,G,G,G) + M(1,F,G,G) + M(F^{-1}G,G,F,F) + q(Dx)v + (3/8)x
  Field ones(g, v.time);
  for (double& t : ones.values) t = 1.0;
  const Field vy_full = mul(p.f_inv, p.fg.G, deal);  // F^{-1} G
  Field n2 = quadlinear_M(ones, p.fg.F, p.fg.F, p.fg.F, deal) +
             quadlinear_M(vy_full, p.fg.G, p.fg.G, p.fg.G, deal) +
             quadlinear_M(ones, p.fg.F, p.fg.G, p.fg.G, deal) +
             quadlinear_M(vy_full, p.fg.G, p.fg.F, p.fg.F, deal) + apply_poly_op(q, v);
  for (int i = 0; i < g.n_s; ++i) {
    const double c = 0.375 * g.x(i);
    for (int j = 0; j < g.n_y; ++j) n2.at(i, j) += c;
  }
  return {std::move(n1), std::move(n2)};
}

}  // namespace tfns
