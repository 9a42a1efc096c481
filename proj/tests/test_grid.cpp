#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "tfns/grid.hpp"
#include "tfns/io.hpp"

using namespace tfns;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.s_min = -2.0;
  g.s_max = 2.0;
  g.n_s = 201;
  g.y_period = kTwoPi;
  g.n_y = 32;
  return g;
}

Field random_field(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Field f(g);
  for (double& v : f.values) v = dist(rng);
  return f;
}

// max relative error over interior rows, scaled by the max magnitude of ref
double interior_rel_error(const Field& got, const Field& ref, int skip) {
  double scale = max_abs(ref);
  double err = 0.0;
  for (int i = skip; i < got.grid.n_s - skip; ++i)
    for (int j = 0; j < got.grid.n_y; ++j) err = std::max(err, std::fabs(got.at(i, j) - ref.at(i, j)));
  return err / scale;
}

}  // namespace

TEST_CASE("grid validation") {
  GridSpec g = small_grid();
  CHECK_NOTHROW(g.validate());
  g.s_min = 3.0;
  CHECK_THROWS_AS(g.validate(), GridError);
  g = small_grid();
  g.n_y = 31;
  CHECK_THROWS_AS(g.validate(), GridError);
  g = small_grid();
  g.y_period = 0.0;
  CHECK_THROWS_AS(g.validate(), GridError);

  g = small_grid();
  CHECK(g.ds() == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(g.x(0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(g.mode_number(0) == 0);
  CHECK(g.mode_number(16) == 16);
  CHECK(g.mode_number(31) == -1);
  CHECK(g.eta(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Dx eigenfunction x^(1+beta)") {
  const GridSpec g = small_grid();
  const double gamma = 1.0 + beta_constant();
  const Field f = make_field(g, [&](double x, double) { return std::pow(x, gamma); });
  const Field ref = make_field(g, [&](double x, double) { return gamma * std::pow(x, gamma); });
  const Field d = apply_Dx(f, 1);
  CHECK(interior_rel_error(d, ref, 2) < 5e-7);
  CHECK(interior_rel_error(d, ref, 0) < 2e-5);  // one-sided boundary rows
}

TEST_CASE("Dx annihilates constants to the last bit") {
  const GridSpec g = small_grid();
  const Field one = make_field(g, [](double, double) { return 1.0; });
  for (int order = 1; order <= 8; ++order) CHECK(max_abs(apply_Dx(one, order)) == 0.0);
  // power-of-two constants scale the weights exactly, so they annihilate too
  for (double cval : {0.25, -0.5, 2.0}) {
    const Field c = make_field(g, [cval](double, double) { return cval; });
    CHECK(max_abs(apply_Dx(c, 1)) == 0.0);
  }
}

TEST_CASE("Dx^4 on x^2 = 16 x^2") {
  const GridSpec g = small_grid();
  const Field f = make_field(g, [](double x, double) { return x * x; });
  const Field ref = make_field(g, [](double x, double) { return 16.0 * x * x; });
  CHECK(interior_rel_error(apply_Dx(f, 4), ref, 3) < 1e-4);
}

TEST_CASE("Dx rejects bad orders and too-small grids") {
  const GridSpec g = small_grid();
  const Field f(g);
  CHECK_THROWS_AS(apply_Dx(f, 0), GridError);
  CHECK_THROWS_AS(apply_Dx(f, 9), GridError);
  GridSpec tiny = g;
  tiny.n_s = 12;
  const Field ft(tiny);
  CHECK_THROWS_AS(apply_Dx(ft, 8), GridError);  // needs n_s >= 13
  CHECK_NOTHROW(apply_Dx(ft, 7));
}

TEST_CASE("Dy analytic oracle and y-independence") {
  GridSpec g = small_grid();
  g.y_period = 3.7;
  const double om = kTwoPi / g.y_period;
  const Field f = make_field(g, [&](double x, double y) { return x * std::sin(om * y); });
  const Field ref = make_field(g, [&](double x, double y) { return x * x * om * std::cos(om * y); });
  const Field d = apply_Dy(f);
  CHECK(interior_rel_error(d, ref, 0) < 1e-12);

  const Field fy = make_field(g, [](double x, double) { return x * x; });
  CHECK(max_abs(apply_Dy(fy)) == 0.0);
}

TEST_CASE("commutator [Dx, Dy] = Dy") {
  const GridSpec g = small_grid();
  const Field f = make_field(g, [](double x, double y) { return x * std::sin(y); });
  const Field lhs = apply_Dx(apply_Dy(f), 1) - apply_Dy(apply_Dx(f, 1));
  const Field rhs = apply_Dy(f);
  CHECK(interior_rel_error(lhs, rhs, 2) < 1e-5);
}

TEST_CASE("apply_poly_op: kernel functions, values, exact zero on constants") {
  const GridSpec g = small_grid();
  const double b = beta_constant();
  const auto q = make_symbol(Symbol::q);

  // x^{1+beta} is in ker q(Dx)
  const double gamma = 1.0 + b;
  const Field ker = make_field(g, [&](double x, double) { return std::pow(x, gamma); });
  double scale = 0.0;
  for (int j = 0; j <= q.degree(); ++j) scale += std::fabs(q.coeff(j)) * std::pow(gamma, j);
  const Field qk = apply_poly_op(q, ker);
  double err = 0.0;
  for (int i = 3; i < g.n_s - 3; ++i)
    for (int j = 0; j < g.n_y; ++j)
      err = std::max(err, std::fabs(qk.at(i, j)) / (scale * std::pow(g.x(i), gamma)));
  CHECK(err < 1e-5);

  // q(Dx) 1 = q(0) = 0 exactly (zero constant coefficient, exact stencils)
  const Field one = make_field(g, [](double, double) { return 1.0; });
  CHECK(max_abs(apply_poly_op(q, one)) == 0.0);

  // r(Dx) x = 6x
  const auto r = make_symbol(Symbol::r);
  const Field fx = make_field(g, [](double x, double) { return x; });
  const Field ref = make_field(g, [](double x, double) { return 6.0 * x; });
  CHECK(interior_rel_error(apply_poly_op(r, fx), ref, 2) < 1e-6);
}

TEST_CASE("eigen-relation for q, q_tilde, q_breve on power functions") {
  const GridSpec g = small_grid();
  const double b = beta_constant();
  for (Symbol sym : {Symbol::q, Symbol::q_tilde, Symbol::q_breve}) {
    const auto P = make_symbol(sym);
    for (double gamma : {-0.5, 0.5 - b, 0.0, 1.0, 1.0 + b, 2.0}) {
      const Field f = make_field(g, [&](double x, double) { return std::pow(x, gamma); });
      const Field got = apply_poly_op(P, f);
      const double pg = eval_poly(P, gamma);
      double scale = 0.0;
      for (int j = 0; j <= P.degree(); ++j)
        scale += std::fabs(P.coeff(j)) * std::pow(std::fabs(gamma) + 0.5, j);
      double err = 0.0;
      for (int i = 3; i < g.n_s - 3; ++i) {
        const double xg = std::pow(g.x(i), gamma);
        for (int j = 0; j < g.n_y; ++j)
          err = std::max(err, std::fabs(got.at(i, j) - pg * xg) / (scale * xg));
      }
      CAPTURE(static_cast<int>(sym));
      CAPTURE(gamma);
      CHECK(err < 1e-5);
    }
  }
}

TEST_CASE("linearity of the operators") {
  const GridSpec g = small_grid();
  const Field u = random_field(g, 11), w = random_field(g, 22);
  const double a = 1.7, b = -0.3;
  const Field comb = a * u + b * w;

  const Field d1 = apply_Dx(comb, 2);
  const Field d2 = a * apply_Dx(u, 2) + b * apply_Dx(w, 2);
  CHECK(interior_rel_error(d1, d2, 0) < 1e-13);

  const Field e1 = apply_Dy(comb);
  const Field e2 = a * apply_Dy(u) + b * apply_Dy(w);
  double scale = std::max(1.0, max_abs(e2));
  CHECK(max_abs(e1 - e2) / scale < 1e-13);
}

TEST_CASE("fourier round trip, tone content, Hermitian symmetry") {
  const GridSpec g = small_grid();
  const Field f = random_field(g, 99);
  const Field back = inverse_fourier_y(fourier_y(f));
  CHECK(max_abs(back - f) / max_abs(f) < 1e-13);

  // pure tone: all content in modes k = +-1
  const Field tone = make_field(g, [&](double, double y) { return std::cos(kTwoPi * y / g.y_period); });
  const SpectralField T = fourier_y(tone);
  for (int j = 0; j < g.n_y; ++j) {
    const int k = g.mode_number(j);
    const double mag = std::abs(T.at(5, j));
    if (k == 1 || k == -1)
      CHECK(mag == doctest::Approx(std::sqrt(g.n_y) / 2.0).epsilon(1e-12));
    else
      CHECK(mag <= 1e-13 * std::sqrt(static_cast<double>(g.n_y)));
  }

  // Hermitian symmetry of a real field's transform
  const SpectralField F = fourier_y(f);
  for (int j = 1; j < g.n_y / 2; ++j) {
    const std::complex<double> zp = F.at(7, j), zm = F.at(7, g.n_y - j);
    CHECK(std::abs(zp - std::conj(zm)) < 1e-12 * (1.0 + std::abs(zp)));
  }

  // constant field: all energy in the zero mode
  const Field c = make_field(g, [](double, double) { return 2.5; });
  const SpectralField C = fourier_y(c);
  for (int j = 1; j < g.n_y; ++j) CHECK(std::abs(C.at(3, j)) == 0.0);
  CHECK(C.at(3, 0).real() == doctest::Approx(2.5 * std::sqrt(g.n_y)).epsilon(1e-14));
}

TEST_CASE("four Dy applications equal one spectral multiplication by (i eta)^4 x^4") {
  const GridSpec g = small_grid();
  const Field f = make_field(g, [](double x, double y) {
    return x * (0.3 * std::sin(y) + 0.2 * std::cos(3.0 * y));
  });
  Field four = f;
  for (int it = 0; it < 4; ++it) four = apply_Dy(four);

  SpectralField F = fourier_y(f);
  for (int i = 0; i < g.n_s; ++i) {
    const double x4 = std::pow(g.x(i), 4);
    for (int j = 0; j < g.n_y; ++j) {
      const double e = g.eta(j);
      F.at(i, j) *= x4 * e * e * e * e;  // (i eta)^4 = eta^4
    }
  }
  const Field direct = inverse_fourier_y(F);
  CHECK(max_abs(four - direct) / max_abs(direct) < 1e-12);
}

TEST_CASE("spectral Dy agrees with the physical path") {
  const GridSpec g = small_grid();
  const Field f = random_field(g, 5);
  const Field a = apply_Dy(f);
  const Field b = inverse_fourier_y(apply_Dy_spectral(fourier_y(f)));
  const double scale = std::max(1.0, max_abs(a));
  CHECK(max_abs(a - b) / scale < 1e-12);
}

TEST_CASE("Dx commutes with the y transform") {
  const GridSpec g = small_grid();
  const Field f = random_field(g, 31);
  const SpectralField a = fourier_y(apply_Dx(f, 2));
  const SpectralField b = apply_Dx(fourier_y(f), 2);
  double err = 0.0, scale = 0.0;
  for (std::size_t n = 0; n < a.modes.size(); ++n) {
    err = std::max(err, std::abs(a.modes[n] - b.modes[n]));
    scale = std::max(scale, std::abs(a.modes[n]));
  }
  CHECK(err / scale < 1e-12);
}

TEST_CASE("dealias_y removes exactly the high modes") {
  const GridSpec g = small_grid();  // n_y = 32, kmax = 10
  const Field f = make_field(g, [](double x, double y) {
    return x * std::cos(3.0 * y) + 0.5 * std::cos(14.0 * y);
  });
  const Field d = dealias_y(f);
  const Field expect = make_field(g, [](double x, double y) { return x * std::cos(3.0 * y); });
  CHECK(max_abs(d - expect) / max_abs(expect) < 1e-13);
}

TEST_CASE("stencil weights: exact zero row sums and the classical 5-point first derivative") {
  for (int m = 1; m <= 8; ++m) {
    const StencilSet& st = stencil_set(m);
    CHECK(st.width == 2 * st.halfwidth + 1);
    for (const auto& row : st.weights) {
      double sum = 0.0;
      for (double w : row) sum += w;
      CHECK(sum == 0.0);
    }
  }
  const StencilSet& st1 = stencil_set(1);
  REQUIRE(st1.width == 5);
  const double classical[5] = {1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0};
  for (int t = 0; t < 5; ++t)
    CHECK(st1.weights[2][t] == doctest::Approx(classical[t]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("binary dump round trip and CSV shape") {
  GridSpec g = small_grid();
  g.n_s = 17;
  g.n_y = 8;
  const Field f = random_field(g, 123);
  const std::string bin = "/tmp/tfns_test_field.bin";
  write_field_binary(f, bin);
  const Field r = read_field_binary(bin);
  CHECK(r.grid == f.grid);
  CHECK(r.time == f.time);
  CHECK(max_abs(r - f) == 0.0);

  const std::string csv = "/tmp/tfns_test_field.csv";
  write_field_csv(f, csv, "unit test\nsecond line");
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# unit test");
  std::getline(in, line);
  CHECK(line == "# second line");
  std::getline(in, line);
  CHECK(line == "s,x,y,value");
  std::getline(in, line);
  std::ostringstream expect;
  expect << format_double(g.s(0)) << "," << format_double(g.x(0)) << "," << format_double(g.y(0))
         << "," << format_double(f.at(0, 0));
  CHECK(line == expect.str());
  in.close();
  std::ifstream again(csv);
  int rows = 0;
  while (std::getline(again, line)) ++rows;
  CHECK(rows == 2 + 1 + g.n_s * g.n_y);
  std::remove(bin.c_str());
  std::remove(csv.c_str());
}

TEST_CASE("corrupt binary dumps are rejected") {
  const std::string path = "/tmp/tfns_bad_dump.bin";
  std::ofstream out(path, std::ios::binary);
  out.write("NOTMAGIC", 8);
  out.close();
  CHECK_THROWS_AS(read_field_binary(path), Error);
  std::remove(path.c_str());
}
