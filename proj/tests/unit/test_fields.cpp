#include <cmath>
#include <random>

#include "bwlab/fields.hpp"
#include "bwlab/groundstate.hpp"
#include "doctest.h"

using namespace bwlab;

TEST_CASE("make_grid spacing and size") {
  auto g = make_grid(1, 10.0, 2048);
  CHECK(g->dx() == doctest::Approx(20.0 / 2048).epsilon(1e-15));
  CHECK(g->coord(0) == -10.0);
  CHECK(make_grid(2, 10.0, 256)->size() == 65536u);
  CHECK_THROWS_AS(make_grid(1, 10.0, 100), InvalidArgument);
  CHECK_THROWS_AS(make_grid(3, 10.0, 64), InvalidArgument);
  CHECK_THROWS_AS(make_grid(1, -1.0, 64), InvalidArgument);
}

TEST_CASE("spectral gradient") {
  auto g = make_grid(1, 10.0, 512);
  SUBCASE("constant") {
    auto f = ComplexField::from_function(g, [](const Point&) { return cplx(2.0, -1.0); });
    CHECK(spectral_gradient(f)[0].max_abs() < 1e-13);
  }
  SUBCASE("resolved sine") {
    const double k = kPi / 10.0;
    auto f = ComplexField::from_function(g, [&](const Point& x) { return cplx(std::sin(k * x[0]), 0.0); });
    auto df = spectral_gradient(f)[0];
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      err = std::max(err, std::abs(df[i] - k * std::cos(k * g->coord(i))));
    CHECK(err < 1e-12);
  }
  SUBCASE("gaussian against its analytic derivative") {
    auto f = ComplexField::from_function(g, [](const Point& x) { return cplx(std::exp(-x[0] * x[0]), 0.0); });
    auto df = spectral_gradient(f)[0];
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double x = g->coord(i);
      err = std::max(err, std::abs(df[i] - (-2.0 * x * std::exp(-x * x))));
    }
    CHECK(err < 1e-10);
  }
  SUBCASE("d=2 laplacian of a gaussian") {
    auto g2 = make_grid(2, 8.0, 128);
    auto f = ComplexField::from_function(g2, [](const Point& x) { return cplx(std::exp(-x[0] * x[0] - x[1] * x[1]), 0.0); });
    auto lap = spectral_laplacian(f);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Point x = g2->point(i);
      const double r2 = x[0] * x[0] + x[1] * x[1];
      err = std::max(err, std::abs(lap[i] - (4.0 * r2 - 4.0) * std::exp(-r2)));
    }
    CHECK(err < 1e-9);
  }
}

TEST_CASE("inner products and norms") {
  auto g = make_grid(1, 10.0, 1024);
  auto one = ComplexField::from_function(g, [](const Point&) { return cplx(1.0, 0.0); });
  CHECK(inner_product(one, one).real() == doctest::Approx(20.0).epsilon(1e-14));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  auto f = ComplexField::from_function(g, [&](const Point&) { return cplx(n01(rng), n01(rng)); });
  auto h = ComplexField::from_function(g, [&](const Point&) { return cplx(n01(rng), n01(rng)); });
  const cplx ff = inner_product(f, f);
  CHECK(ff.real() >= 0.0);
  CHECK(std::abs(ff.imag()) < 1e-12 * ff.real());
  CHECK(std::abs(inner_product(f, h) - std::conj(inner_product(h, f))) < 1e-12);
  CHECK(std::abs(fourier_l2_norm(f) - l2_norm(f)) < 1e-12 * l2_norm(f));

  const auto z = norms(ComplexField(g));
  CHECK(z.l2 == 0.0);
  CHECK(z.h1 == 0.0);
  CHECK(z.sigma == 0.0);

  // Smooth bump against an independent Simpson quadrature of its square.
  auto bump = [](double x) { return std::exp(-x * x / 2.0) / std::pow(kPi, 0.25); };
  auto b = ComplexField::from_function(g, [&](const Point& x) { return cplx(bump(x[0]), 0.0); });
  const int m = 20000;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = -10.0 + 20.0 * i / m;
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * bump(x) * bump(x);
  }
  s *= 20.0 / m / 3.0;
  CHECK(std::abs(norms(b).l2 - std::sqrt(s)) < 1e-10);
}

TEST_CASE("ground-state mass by quadrature") {
  const auto gs = solve_ground_state(1);
  auto g = make_grid(1, 20.0, 2048);
  auto q = ComplexField::from_function(g, [&](const Point& x) { return cplx(gs.ground(std::abs(x[0])).value, 0.0); });
  const double exact = std::sqrt(3.0) * kPi / 2.0;
  CHECK(std::abs(inner_product(q, q).real() - exact) / exact < 1e-8);
}

TEST_CASE("fourier resampling and evaluation") {
  auto g = make_grid(1, 10.0, 256);
  auto f = ComplexField::from_function(g, [](const Point& x) { return cplx(std::exp(-x[0] * x[0]), std::sin(x[0]) * std::exp(-x[0] * x[0])); });
  const Point p{0.123, 0.0};
  const cplx want(std::exp(-p[0] * p[0]), std::sin(p[0]) * std::exp(-p[0] * p[0]));
  CHECK(std::abs(fourier_evaluate(f, p) - want) < 1e-12);
  auto half = fourier_resample(f, 0.5, {0.0, 0.0}, g);
  double err = 0.0;
  for (std::size_t i = 0; i < half.size(); ++i) {
    const double x = 0.5 * g->coord(i);
    err = std::max(err, std::abs(half[i] - cplx(std::exp(-x * x), std::sin(x) * std::exp(-x * x))));
  }
  CHECK(err < 1e-12);
}

TEST_CASE("snapshot round trip is bit exact") {
  auto g = make_grid(2, 5.0, 64);
  auto f = ComplexField::from_function(g, [](const Point& x) { return cplx(x[0], std::cos(x[1])); });
  const auto path = std::filesystem::temp_directory_path() / "bwlab_snapshot_test.nlsf";
  write_snapshot(path, f, 0.375);
  const auto s = read_snapshot(path);
  CHECK(s.t == 0.375);
  CHECK(s.field.grid() == f.grid());
  bool same = true;
  for (std::size_t i = 0; i < f.size(); ++i) same = same && s.field[i] == f[i];
  CHECK(same);
  std::filesystem::remove(path);
}
