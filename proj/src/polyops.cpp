#include "tfns/polyops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace tfns {

namespace {
constexpr double kTrimTol = 0.0;  // keep exact zeros only when produced exactly
}

RealPolynomial::RealPolynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

void RealPolynomial::trim() {
  while (!c_.empty() && c_.back() == kTrimTol) c_.pop_back();
}

RealPolynomial RealPolynomial::from_roots(double leading, const std::vector<double>& roots) {
  std::vector<double> c{leading};
  for (double r : roots) {
    // multiply by (z - r)
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      next[j + 1] += c[j];
      next[j] -= r * c[j];
    }
    c = std::move(next);
  }
  return RealPolynomial(std::move(c));
}

double RealPolynomial::operator()(double z) const {
  double acc = 0.0;
  for (std::size_t j = c_.size(); j-- > 0;) acc = acc * z + c_[j];
  return acc;
}

RealPolynomial RealPolynomial::shifted(double a) const {
  // Taylor shift: repeated synthetic evaluation, in place.
  std::vector<double> c = c_;
  const int n = static_cast<int>(c.size());
  for (int i = 0; i < n - 1; ++i)
    for (int j = n - 2; j >= i; --j) c[j] += a * c[j + 1];
  return RealPolynomial(std::move(c));
}

RealPolynomial operator*(const RealPolynomial& a, const RealPolynomial& b) {
  if (a.c_.empty() || b.c_.empty()) return RealPolynomial();
  std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
  return RealPolynomial(std::move(c));
}

RealPolynomial operator+(const RealPolynomial& a, const RealPolynomial& b) {
  std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j < a.c_.size()) c[j] += a.c_[j];
    if (j < b.c_.size()) c[j] += b.c_[j];
  }
  return RealPolynomial(std::move(c));
}

RealPolynomial operator-(const RealPolynomial& a, const RealPolynomial& b) {
  std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j < a.c_.size()) c[j] += a.c_[j];
    if (j < b.c_.size()) c[j] -= b.c_[j];
  }
  return RealPolynomial(std::move(c));
}

double beta_constant() {
  static const double beta = (std::sqrt(13.0) - 1.0) / 4.0;
  return beta;
}

RealPolynomial make_symbol(Symbol s) {
  const double b = beta_constant();
  using P = RealPolynomial;
  switch (s) {
    case Symbol::q:
      return P::from_roots(1.0, {-0.5, 0.5 - b, 0.0, 1.0 + b});
    case Symbol::r:
      return P::from_roots(2.0, {-1.0, -0.5});
    case Symbol::q_tilde:
      return P::from_roots(1.0, {-0.5, 0.5 - b, 1.0, 1.0 + b});
    case Symbol::r_tilde:
      return P::from_roots(2.0, {-1.0, -1.0, -0.5});
    case Symbol::r_check1:
      return P::from_roots(2.0, {-1.5, -1.0, -1.0, -0.5, -b - 0.5, b});
    case Symbol::r_check2:
      // roots of q_tilde shifted left by 3, plus -3 itself
      return P::from_roots(1.0, {-3.5, -b - 2.5, -3.0, -2.0, b - 2.0});
    case Symbol::q_breve:
      return P::from_roots(1.0, {0.5, 1.5 - b, 2.0 + b, 4.0});
    case Symbol::r_breve1:
      return P::from_roots(2.0, {2.0, -1.5, -1.0, -1.0, -0.5, -b - 0.5, b});
    case Symbol::r_breve2:
      return P::from_roots(1.0, {-1.0, -3.5, -b - 2.5, -3.0, -2.0, b - 2.0});
  }
  std::abort();
}

double eval_poly(const RealPolynomial& p, double z) { return p(z); }

std::array<double, 4> symbol_roots(Symbol s) {
  const double b = beta_constant();
  switch (s) {
    case Symbol::q:
      return {-0.5, 0.5 - b, 0.0, 1.0 + b};
    case Symbol::q_tilde:
      return {-0.5, 0.5 - b, 1.0, 1.0 + b};
    case Symbol::q_breve:
      return {0.5, 1.5 - b, 2.0 + b, 4.0};
    default:
      break;
  }
  std::abort();
}

bool CoercivityReport::contains(double alpha) const {
  for (const Interval& iv : admissible)
    if (iv.contains(alpha)) return true;
  return false;
}

CoercivityReport coercivity_report(std::array<double, 4> roots) {
  std::sort(roots.begin(), roots.end());
  CoercivityReport rep;
  rep.roots = roots;
  rep.m = (roots[0] + roots[1] + roots[2] + roots[3]) / 4.0;
  double var = 0.0;
  for (double g : roots) var += (g - rep.m) * (g - rep.m);
  var /= 4.0;
  rep.sigma = std::sqrt(var);

  // Condition 1 (open): alpha outside [g1,g2] and outside [g3,g4].
  // Condition 2 (closed): |alpha - m| <= sigma/sqrt(3).
  const double lo2 = rep.m - rep.sigma / std::sqrt(3.0);
  const double hi2 = rep.m + rep.sigma / std::sqrt(3.0);
  struct Piece {
    double lo, hi;
    bool lo_open, hi_open;
  };
  const double inf = std::numeric_limits<double>::infinity();
  const Piece pieces[3] = {{-inf, roots[0], true, true},
                           {roots[1], roots[2], true, true},
                           {roots[3], inf, true, true}};
  for (const Piece& p : pieces) {
    Interval iv;
    // Intersect the open piece with the closed band [lo2, hi2]; when the
    // binding endpoint comes from the closed band it stays closed, and ties
    // resolve open (both constraints must hold).
    if (lo2 > p.lo) {
      iv.lo = lo2;
      iv.lo_closed = true;
    } else {
      iv.lo = p.lo;
      iv.lo_closed = false;
    }
    if (hi2 < p.hi) {
      iv.hi = hi2;
      iv.hi_closed = true;
    } else {
      iv.hi = p.hi;
      iv.hi_closed = false;
    }
    const bool nonempty = iv.lo < iv.hi || (iv.lo == iv.hi && iv.lo_closed && iv.hi_closed);
    if (nonempty) rep.admissible.push_back(iv);
  }
  return rep;
}

double omega(const std::array<double, 4>& roots, double alpha) {
  double acc = 0.0;
  for (int j = 0; j < 4; ++j)
    for (int k = j + 1; k < 4; ++k) acc += (roots[j] - alpha) * (roots[k] - alpha);
  return -acc;
}

}  // namespace tfns
