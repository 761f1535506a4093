#include <algorithm>
#include <cmath>

#include "bwlab/perturbation.hpp"
#include "doctest.h"

using namespace bwlab;

TEST_CASE("flat spatial builder") {
  FlatBuilderOptions fo;
  fo.singularities = {{0.0, 0.0}};
  fo.order = 5;
  auto phi = build_flat_spatial(fo, 1);
  auto as_complex = [](const ScalarFunction& f) { return [f](const Point& x) { return cplx(f(x), 0.0); }; };
  CHECK(verify_flatness(as_complex(phi), fo.singularities, 5, 1, 0.02) < 1e-6);

  fo.singularities = {{-3.0, 0.0}, {3.0, 0.0}};
  auto phi2 = build_flat_spatial(fo, 1);
  CHECK(verify_flatness(as_complex(phi2), fo.singularities, 5, 1, 0.02) < 1e-6);
  CHECK(std::abs(phi2({1.0, 0.0})) > 1e-3);

  fo.amplitude = 0.0;
  auto zero = build_flat_spatial(fo, 1);
  CHECK(zero({0.7, 0.0}) == 0.0);

  FlatBuilderOptions f2;
  f2.singularities = {{1.0, -1.0}};
  f2.order = 5;
  CHECK(verify_flatness(as_complex(build_flat_spatial(f2, 2)), f2.singularities, 5, 2, 0.02) < 1e-6);
}

TEST_CASE("flatness verifier detects a plain gaussian") {
  auto g = [](const Point& x) { return cplx(std::exp(-x[0] * x[0]), 0.0); };
  CHECK(verify_flatness(g, {{0.0, 0.0}}, 2, 1) > 1.0);
}

TEST_CASE("residue profile is flat to order 2m") {
  FlatBuilderOptions fo;
  fo.singularities = {{-4.0, 0.0}, {4.0, 0.0}};
  fo.order = 6;
  fo.width = 2.0;
  CHECK(verify_flatness(build_flat_profile(fo, 1), fo.singularities, 6, 1) < kFlatnessTolerance);
  auto g = make_grid(1, 16.0, 2048);
  auto z = build_regular_residue(fo, 3, 1e-3, g);
  CHECK(z.all_finite());
  CHECK(l2_norm(z) > 0.0);
  CHECK(l2_norm(z) <= 1e-3);
}

TEST_CASE("fornberg weights") {
  const auto w = fornberg_weights({-1.0, 0.0, 1.0}, 2);
  CHECK(w[1][0] == doctest::Approx(-0.5));
  CHECK(w[1][2] == doctest::Approx(0.5));
  CHECK(w[2][1] == doctest::Approx(-2.0));
}

TEST_CASE("brownian paths") {
  const auto nodes = uniform_nodes(0.0, 1.0, 0.01);
  CHECK(nodes.size() == 101u);
  CHECK(nodes.back() == 1.0);
  const auto a = sample_brownian(2, nodes, 42), b = sample_brownian(2, nodes, 42);
  CHECK(a[1].values() == b[1].values());
  CHECK(a[0](0.0) == 0.0);
  CHECK(sample_brownian(0, nodes, 1).empty());

  // Ensemble: variance at t = 0.5 and normality of the unit increments.
  const auto coarse = uniform_nodes(0.0, 0.5, 0.25);
  const auto ens = sample_brownian(10000, coarse, 99);
  double var = 0.0;
  std::vector<double> z;
  for (const auto& p : ens) {
    var += p(0.5) * p(0.5);
    z.push_back((p(0.25) - p(0.0)) / 0.5);
  }
  var /= ens.size();
  CHECK(std::abs(var - 0.5) / 0.5 < 0.05);
  std::sort(z.begin(), z.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
    ks = std::max({ks, std::abs(cdf - double(i) / z.size()), std::abs(cdf - double(i + 1) / z.size())});
  }
  CHECK(ks < 1.628 / std::sqrt(double(z.size())));
}

TEST_CASE("coefficients") {
  auto g = make_grid(1, 16.0, 1024);
  FlatBuilderOptions fo;
  fo.singularities = {{-4.0, 0.0}, {4.0, 0.0}};
  auto phi = build_flat_spatial(fo, 1);
  const auto nodes = uniform_nodes(0.0, 1.0, 1e-3);

  SUBCASE("free model and zero paths") {
    PerturbationModel free(g);
    const auto c = free.coefficients(0.3);
    CHECK(c.a0.max_abs() == 0.0);
    PerturbationModel zero(g, {phi}, {PiecewiseLinearPath::constant(0.0, 1.0, 0.0)}, 5);
    const auto cz = zero.coefficients(0.3);
    CHECK(cz.a0.max_abs() == 0.0);
    CHECK(cz.a1[0].max_abs() == 0.0);
  }
  SUBCASE("unit path: definitions recomputed") {
    PerturbationModel m(g, {phi}, {PiecewiseLinearPath::constant(0.0, 1.0, 1.0)}, 5);
    const auto c = m.coefficients(0.5);
    double e0 = 0.0, e1 = 0.0, re1 = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double gx = m.grad(0, 0)[i];
      e0 = std::max(e0, std::abs(c.a0[i] - cplx(-gx * gx, m.laplacian(0)[i])));
      e1 = std::max(e1, std::abs(c.a1[0][i] - cplx(0.0, 2.0 * gx)));
      re1 = std::max(re1, std::abs(c.a1[0][i].real()));
    }
    CHECK(e0 < 1e-12);
    CHECK(e1 < 1e-12);
    CHECK(re1 == 0.0);
    CHECK(m.boundary_proxy() < 1e-8);
  }
  SUBCASE("brownian path: mass-preserving structure Im a0 = div Im a1 / 2") {
    PerturbationModel m(g, {phi}, sample_brownian(1, nodes, 5), 5);
    const auto c = m.coefficients(0.37);
    ComplexField im1(g);
    for (std::size_t i = 0; i < g->size(); ++i) im1[i] = c.a1[0][i].imag();
    const auto div = spectral_gradient(im1)[0];
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) err = std::max(err, std::abs(c.a0[i].imag() - 0.5 * div[i].real()));
    CHECK(err < 1e-10);
  }
}

TEST_CASE("doss-sussman transform") {
  auto g = make_grid(1, 16.0, 512);
  FlatBuilderOptions fo;
  fo.singularities = {{0.0, 0.0}};
  PerturbationModel m(g, {build_flat_spatial(fo, 1)}, sample_brownian(1, uniform_nodes(0.0, 1.0, 1e-2), 3), 5);
  auto v = ComplexField::from_function(g, [](const Point& x) { return cplx(std::exp(-x[0] * x[0]), x[0]); });
  const auto X = doss_sussman(v, m, 0.6, Direction::forward);
  CHECK(std::abs(l2_norm(X) - l2_norm(v)) < 1e-12 * l2_norm(v));
  CHECK((doss_sussman(X, m, 0.6, Direction::inverse) - v).max_abs() < 1e-14);
  CHECK((doss_sussman(v, m, 0.0, Direction::forward) - v).max_abs() == 0.0);
}
