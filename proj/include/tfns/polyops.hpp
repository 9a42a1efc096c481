#pragma once
#include <array>
#include <cstddef>
#include <vector>

namespace tfns {

// Real polynomial with coefficients stored in ascending degree.
// Factored forms are constructors only; arithmetic works on expanded vectors.
class RealPolynomial {
 public:
  RealPolynomial() = default;  // the zero polynomial
  explicit RealPolynomial(std::vector<double> coeffs);
  static RealPolynomial from_roots(double leading, const std::vector<double>& roots);

  // -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }
  double coeff(std::size_t j) const { return j < c_.size() ? c_[j] : 0.0; }

  double operator()(double z) const;  // Horner evaluation

  RealPolynomial shifted(double a) const;  // p(z + a), Taylor shift

  friend RealPolynomial operator*(const RealPolynomial& a, const RealPolynomial& b);
  friend RealPolynomial operator+(const RealPolynomial& a, const RealPolynomial& b);
  friend RealPolynomial operator-(const RealPolynomial& a, const RealPolynomial& b);

 private:
  std::vector<double> c_;
  void trim();
};

// The nine operator symbols of the linearized problem.
enum class Symbol { q, r, q_tilde, r_tilde, r_check1, r_check2, q_breve, r_breve1, r_breve2 };

// (sqrt(13) - 1) / 4, the irrational root constant; lies in (1/2, 1) and
// solves 4*beta^2 + 2*beta - 3 = 0.
double beta_constant();

// Build a symbol from its factored definition, returned expanded.
RealPolynomial make_symbol(Symbol s);

// Horner evaluation (free-function form).
double eval_poly(const RealPolynomial& p, double z);

// Roots (ascending) of the three quartic symbols q, q_tilde, q_breve.
std::array<double, 4> symbol_roots(Symbol s);

// A real interval with individually open/closed endpoints.
struct Interval {
  double lo = 0.0, hi = 0.0;
  bool lo_closed = false, hi_closed = false;
  bool contains(double a) const {
    const bool above = lo_closed ? a >= lo : a > lo;
    const bool below = hi_closed ? a <= hi : a < hi;
    return above && below;
  }
};

// Quantitative coercivity data for a quartic with real roots.
struct CoercivityReport {
  std::array<double, 4> roots{};  // ascending
  double m = 0.0;                 // root mean
  double sigma = 0.0;             // sqrt of the root variance, >= 0
  std::vector<Interval> admissible;

  bool contains(double alpha) const;
};

// m, sigma per the root mean/variance; admissible set =
// ((-inf, g1) U (g2, g3) U (g4, inf))  intersect  [m - sigma/sqrt(3), m + sigma/sqrt(3)],
// with the first condition's endpoints open and the second's closed.
CoercivityReport coercivity_report(std::array<double, 4> roots);

// -sum_{j<k} (g_j - alpha)(g_k - alpha); equals 2(sigma^2 - 3(alpha - m)^2).
double omega(const std::array<double, 4>& roots, double alpha);

}  // namespace tfns
