#include "tfns/norms.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace tfns {

namespace {

void require_same_profile_grid(const Profile& a, const Profile& b) {
  if (a.n() != b.n() || a.s_min != b.s_min || a.ds != b.ds)
    throw GridError("inner_product_alpha: profiles live on different s-grids");
}

}  // namespace

Profile dx_profile(const Profile& f, int order) {
  if (order < 1 || order > 8) throw GridError("dx_profile: order must be in 1..8");
  const StencilSet& st = stencil_set(order);
  const int n = f.n(), w = st.width, r = st.halfwidth;
  if (n < order + 5 || n < w) throw GridError("dx_profile: profile too short for requested order");
  const double scale = std::pow(f.ds, -order);
  Profile out = f;
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - r, 0, n - w);
    const auto& wt = st.weights[i - start];
    double acc = 0.0;
    for (int t = 0; t < w; ++t) acc += wt[t] * f.values[start + t];
    out.values[i] = scale * acc;
  }
  return out;
}

Profile apply_poly_profile(const RealPolynomial& p, const Profile& f) {
  if (p.degree() > 8) throw GridError("apply_poly_profile: degree must be <= 8");
  Profile out = f;
  for (double& v : out.values) v *= p.coeff(0);
  for (int j = 1; j <= p.degree(); ++j) {
    if (p.coeff(j) == 0.0) continue;
    const Profile d = dx_profile(f, j);
    for (int i = 0; i < f.n(); ++i) out.values[i] += p.coeff(j) * d.values[i];
  }
  return out;
}

double inner_product_alpha(const Profile& f, const Profile& g, double alpha) {
  require_same_profile_grid(f, g);
  const int n = f.n();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * std::exp(-2.0 * alpha * f.s(i)) * f.values[i] * g.values[i];
  }
  return acc * f.ds;
}

double sobolev_sq_1d(const Profile& f, int k, double alpha) {
  double total = inner_product_alpha(f, f, alpha);
  Profile d = f;
  for (int j = 1; j <= k; ++j) {
    d = (j <= 8) ? dx_profile(f, j) : dx_profile(d, 1);
    total += inner_product_alpha(d, d, alpha);
  }
  return total;
}

// ---------------------------------------------------------------------------
// 2-D Sobolev norms.  The y-direction sum for each Dy power is evaluated in
// mode space (the transform is unitary, so the periodic y-sum of squares
// equals the mode-magnitude sum), which avoids one inverse transform per
// (lx, ly) pair.  Odd Dy powers annihilate the unpaired Nyquist mode, so it
// is skipped for odd ly exactly as the physical operator does.
// ---------------------------------------------------------------------------
double sobolev_sq(const Field& f, int k, double alpha) {
  if (k < 0) throw ConfigError("sobolev norm: k must be >= 0");
  const GridSpec& g = f.grid;
  const int ns = g.n_s, ny = g.n_y;
  const double ds = g.ds(), dy = g.dy();

  std::vector<Field> tower;
  tower.reserve(k + 1);
  tower.push_back(f);
  for (int p = 1; p <= k; ++p)
    tower.push_back(p <= 8 ? apply_Dx(f, p) : apply_Dx(tower.back(), 1));

  double total = 0.0;
  for (int lx = 0; lx <= k; ++lx) {
    const SpectralField F = fourier_y(tower[lx]);
    const int ly_max = k - lx;
    for (int i = 0; i < ns; ++i) {
      const double ws = ds * ((i == 0 || i == ns - 1) ? 0.5 : 1.0) *
                        std::exp(-(2.0 * alpha + 1.0) * g.s(i));
      const double x = g.x(i);
      double row = 0.0;
      for (int j = 0; j < ny; ++j) {
        const double m2 = std::norm(F.at(i, j));
        if (m2 == 0.0) continue;
        const double b2 = g.eta(j) * g.eta(j) * x * x;
        double p = 1.0;
        for (int ly = 0; ly <= ly_max; ++ly) {
          const bool odd_nyquist = (ly & 1) && j == ny / 2;
          if (!odd_nyquist) row += m2 * p;
          p *= b2;
        }
      }
      total += ws * dy * row;
    }
  }
  return total;
}

double weighted_norm_2d(const Field& f, const NormSpec& spec) {
  if (spec.k < 0 || spec.k > 8)
    throw ConfigError("weighted_norm_2d: k must be in 0..8 (direct stencil range)");
  return std::sqrt(sobolev_sq(f, spec.k, spec.alpha));
}

// ---------------------------------------------------------------------------
// Composite norms.
// ---------------------------------------------------------------------------
double default_delta() { return (beta_constant() - 0.5) / 4.0; }

double NormParams::effective_delta() const { return delta > 0.0 ? delta : default_delta(); }

void validate_norm_params(const NormParams& p, bool strict) {
  const double d = p.effective_delta();
  const double dmax = (beta_constant() - 0.5) / 2.0;
  if (!(d > 0.0) || d > dmax) {
    std::ostringstream err;
    err << "delta = " << d << " outside the admissible range (0, (beta-1/2)/2] = (0, " << dmax
        << "]";
    throw ConfigError(err.str());
  }
  if (!strict) return;
  const int lhs1 = std::max({13, (p.k + 1) / 2 + 3, p.k_breve + 8});
  const int rhs1 = std::min(p.k_tilde, p.k_check);
  if (lhs1 > rhs1) {
    std::ostringstream err;
    err << "derivative counts violate max{13, floor((k+1)/2)+3, k_breve+8} <= min{k_tilde, "
           "k_check}: "
        << lhs1 << " > " << rhs1;
    throw ConfigError(err.str());
  }
  const int lhs2 = std::max(p.k_tilde, p.k_check + 2) + 4;
  if (lhs2 > p.k) {
    std::ostringstream err;
    err << "derivative counts violate max{k_tilde, k_check+2} + 4 <= k: " << lhs2 << " > " << p.k;
    throw ConfigError(err.str());
  }
  if (p.k_breve < 4) {
    std::ostringstream err;
    err << "derivative counts violate 4 <= k_breve: k_breve = " << p.k_breve;
    throw ConfigError(err.str());
  }
}

namespace {

struct PrefixFields {
  Field dx_v;     // Dx v
  Field w;        // q~(Dx) Dx v
  Field w32;      // (Dx-3)(Dx-2) q~(Dx) Dx v
  Field dy_w;     // Dy q~(Dx) Dx v
};

PrefixFields make_prefixes(const Field& v) {
  static const RealPolynomial zeta({0.0, 1.0});
  static const RealPolynomial p_dx = zeta;
  static const RealPolynomial p_w = make_symbol(Symbol::q_tilde) * zeta;
  static const RealPolynomial p_w32 =
      RealPolynomial::from_roots(1.0, {3.0, 2.0}) * make_symbol(Symbol::q_tilde) * zeta;
  PrefixFields out;
  out.dx_v = apply_poly_op(p_dx, v);
  out.w = apply_poly_op(p_w, v);
  out.w32 = apply_poly_op(p_w32, v);
  out.dy_w = apply_Dy(out.w);
  return out;
}

}  // namespace

std::array<double, 6> norm_init_addends(const Field& v, const NormParams& p) {
  const double d = p.effective_delta();
  const PrefixFields pf = make_prefixes(v);
  return {sobolev_sq(v, p.k, -1.0 - d),
          sobolev_sq(pf.dx_v, p.k_tilde, -d),
          sobolev_sq(pf.w, p.k_tilde, d),
          sobolev_sq(pf.w, p.k_check, -d + 1.0),
          sobolev_sq(pf.w32, p.k_check, d + 1.0),
          sobolev_sq(pf.dy_w, p.k_breve, -d + 2.0)};
}

double norm_init(const Field& f, const NormParams& p, bool strict) {
  validate_norm_params(p, strict);
  const auto a = norm_init_addends(f, p);
  double total = 0.0;
  for (double t : a) total += t;
  return std::sqrt(total);
}

std::array<double, 6> norm_rhs_addends(const Field& f, const NormParams& p) {
  const double d = p.effective_delta();
  static const RealPolynomial zm1({-1.0, 1.0});  // (z - 1)
  static const RealPolynomial p_qf = make_symbol(Symbol::q_tilde).shifted(-1.0) * zm1;
  static const RealPolynomial p_q43 = RealPolynomial::from_roots(1.0, {4.0, 3.0}) *
                                      make_symbol(Symbol::q_tilde).shifted(-1.0) * zm1;
  const Field f1 = apply_poly_op(zm1, f);
  const Field fq = apply_poly_op(p_qf, f);
  const Field fq43 = apply_poly_op(p_q43, f);
  const Field fdy = apply_Dy(fq);
  return {sobolev_sq(f, p.k - 2, -d - 0.5),
          sobolev_sq(f1, p.k_tilde - 2, -d + 0.5),
          sobolev_sq(fq, p.k_tilde - 2, d + 0.5),
          sobolev_sq(fq, p.k_check - 2, -d + 1.5),
          sobolev_sq(fq43, p.k_check - 2, d + 1.5),
          sobolev_sq(fdy, p.k_breve - 2, -d + 2.5)};
}

double norm_rhs_contribution(const Field& f, const NormParams& p) {
  validate_norm_params(p, false);
  const auto a = norm_rhs_addends(f, p);
  double total = 0.0;
  for (double t : a) total += t;
  return total;
}

std::array<double, 12> norm_sol_addends(const Field& v, const Field& v_prev, double dt,
                                        const NormParams& p) {
  require_same_grid(v.grid, v_prev.grid, "norm_sol");
  const double d = p.effective_delta();
  const Field dv = (1.0 / dt) * (v - v_prev);
  const PrefixFields pt = make_prefixes(dv);
  const PrefixFields ps = make_prefixes(v);
  return {// backward-difference time-derivative addends
          sobolev_sq(dv, p.k - 2, -d - 1.5),
          sobolev_sq(pt.dx_v, p.k_tilde - 2, -d - 0.5),
          sobolev_sq(pt.w, p.k_tilde - 2, d - 0.5),
          sobolev_sq(pt.w, p.k_check - 2, -d + 0.5),
          sobolev_sq(pt.w32, p.k_check - 2, d + 0.5),
          sobolev_sq(pt.dy_w, p.k_breve - 2, -d + 1.5),
          // spatial addends
          sobolev_sq(v, p.k + 2, -d - 0.5),
          sobolev_sq(ps.dx_v, p.k_tilde + 2, -d + 0.5),
          sobolev_sq(ps.w, p.k_tilde + 2, d + 0.5),
          sobolev_sq(ps.w, p.k_check + 2, -d + 1.5),
          sobolev_sq(ps.w32, p.k_check + 2, d + 1.5),
          sobolev_sq(ps.dy_w, p.k_breve + 2, -d + 2.5)};
}

double norm_sol_contribution(const Field& v, const Field& v_prev, double dt, const NormParams& p) {
  validate_norm_params(p, false);
  const auto a = norm_sol_addends(v, v_prev, dt, p);
  double total = 0.0;
  for (double t : a) total += t;
  return total;
}

// ---------------------------------------------------------------------------
// Boundary traces.
// ---------------------------------------------------------------------------
TraceSet extract_traces(const Field& f, const FitWindow& window) {
  const GridSpec& g = f.grid;
  std::vector<int> rows;
  for (int i = 0; i < g.n_s; ++i)
    if (g.s(i) >= window.s_lo - 1e-12 && g.s(i) <= window.s_hi + 1e-12) rows.push_back(i);
  const int m = static_cast<int>(rows.size());
  if (m < 8) throw FitError("extract_traces: fit window must contain at least 8 s-points");
  const double quarter = g.s_min + 0.25 * (g.s_max - g.s_min);
  if (g.s(rows.back()) > quarter + 1e-12)
    throw FitError("extract_traces: fit window must lie in the lower quarter of the s-range");

  const double beta = beta_constant();
  Eigen::MatrixXd A(m, 4);
  for (int r = 0; r < m; ++r) {
    const double x = g.x(rows[r]);
    A(r, 0) = 1.0;
    A(r, 1) = x;
    A(r, 2) = std::pow(x, 1.0 + beta);
    A(r, 3) = x * x;
  }
  Eigen::Vector4d colscale;
  for (int c = 0; c < 4; ++c) colscale(c) = A.col(c).norm();
  Eigen::MatrixXd As = A;
  for (int c = 0; c < 4; ++c) As.col(c) /= colscale(c);

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double cond = svd.singularValues()(0) / svd.singularValues()(3);
  if (!(cond <= 1e10)) throw FitError("extract_traces: degenerate fit window (condition > 1e10)");

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
  TraceSet out;
  out.v0.resize(g.n_y);
  out.v1.resize(g.n_y);
  out.v1beta.resize(g.n_y);
  out.v2.resize(g.n_y);
  double worst = 0.0;
  Eigen::VectorXd b(m);
  for (int j = 0; j < g.n_y; ++j) {
    for (int r = 0; r < m; ++r) b(r) = f.at(rows[r], j);
    const Eigen::Vector4d cs = qr.solve(b);
    const Eigen::Vector4d c = cs.array() / colscale.array();
    out.v0[j] = c(0);
    out.v1[j] = c(1);
    out.v1beta[j] = c(2);
    out.v2[j] = c(3);
    const double rms = (A * c - b).norm() / std::sqrt(static_cast<double>(m));
    worst = std::max(worst, rms);
  }
  out.fit_residual = worst;
  return out;
}

TraceSet extract_traces(const Field& f) {
  const GridSpec& g = f.grid;
  if (g.n_s < 16) throw FitError("extract_traces: grid has fewer than 16 s-points");
  return extract_traces(f, FitWindow{g.s(0), g.s(15)});
}

double hardy_ratio(const Profile& f, double gamma, double rho) {
  if (gamma == rho) throw ConfigError("hardy_ratio: gamma and rho must differ");
  const Profile df = dx_profile(f, 1);
  Profile den = df;
  for (int i = 0; i < f.n(); ++i) den.values[i] -= gamma * f.values[i];
  const double den_sq = inner_product_alpha(den, den, rho);
  const double num_sq = inner_product_alpha(f, f, rho) + inner_product_alpha(df, df, rho);
  // A profile in the kernel of (Dx - gamma) leaves only stencil-truncation
  // residue in the denominator, many orders below any bounded-ratio regime;
  // the relative cutoff separates the two cleanly.
  if (den_sq <= 1e-12 * std::max(num_sq, 1e-300))
    throw Error("hardy_ratio: denominator |(Dx - gamma) f|_rho vanishes");
  return std::sqrt(num_sq / den_sq);
}

}  // namespace tfns
