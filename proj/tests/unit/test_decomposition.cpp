#include <cmath>
#include <random>

#include "bwlab/decomposition.hpp"
#include "bwlab/perturbation.hpp"
#include "doctest.h"

using namespace bwlab;

namespace {

const GroundStateTable& gs1() {
  static const GroundStateTable t = solve_rho(solve_ground_state(1));
  return t;
}

const std::vector<Point> kPair{{-4.0, 0.0}, {4.0, 0.0}};

ComplexField residue(const GridPtr& g) {
  FlatBuilderOptions fo;
  fo.singularities = kPair;
  fo.order = 8;
  fo.width = 2.0;
  return build_regular_residue(fo, 4, 1e-3, g);
}

double simpson_even(const std::vector<double>& f, double h) {
  double s = f.front() + f.back();
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
  return 2.0 * s * h / 3.0;
}

}  // namespace

TEST_CASE("localizers") {
  auto g = make_grid(1, 16.0, 2048);
  const auto single = build_localizers({{0.0, 0.0}}, g);
  CHECK(single.phi.size() == 1u);
  CHECK(std::abs(single.phi[0].max_abs() - 1.0) < 1e-15);

  const auto loc = build_localizers(kPair, g);
  CHECK(loc.sigma == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  double pou = 0.0, range = 0.0, plateau = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double a = loc.phi[0][i].real(), b = loc.phi[1][i].real();
    pou = std::max(pou, std::abs(a + b - 1.0));
    range = std::max({range, -a, -b, a - 1.0, b - 1.0});
    for (int k = 0; k < 2; ++k)
      if (std::abs(g->coord(i) - kPair[k][0]) <= loc.sigma) plateau = std::max(plateau, 1.0 - loc.phi[k][i].real());
  }
  CHECK(pou < 1e-12);
  CHECK(range <= 0.0);
  CHECK(plateau < 1e-9);
  // Phi_0 is 1 left of the pair and 0 right of it, so it jumps at the periodic
  // wrap; central differences in the interior instead of a spectral derivative.
  double slope = 0.0;
  for (std::size_t i = 1; i + 1 < g->size(); ++i)
    slope = std::max(slope, std::abs(loc.phi[0][i + 1].real() - loc.phi[0][i - 1].real()) /
                                (g->coord(i + 1) - g->coord(i - 1)));
  CHECK(slope * loc.sigma <= loc.gradient_constant);
  CHECK(slope * loc.sigma == doctest::Approx(15.0 / 32.0).epsilon(1e-3));

  auto g2 = make_grid(2, 10.0, 128);
  const auto loc2 = build_localizers({{-3.0, 1.0}, {2.0, -2.0}, {0.5, 3.0}}, g2, 4);
  double pou2 = 0.0;
  for (std::size_t i = 0; i < g2->size(); ++i)
    pou2 = std::max(pou2, std::abs(loc2.phi[0][i].real() + loc2.phi[1][i].real() + loc2.phi[2][i].real() - 1.0));
  CHECK(pou2 < 1e-12);
}

TEST_CASE("boundary fit recovers the boundary parameters") {
  auto g = make_grid(1, 16.0, 2048);
  const auto z = residue(g);
  const auto loc = build_localizers(kPair, g);
  const std::vector<BubbleSpec> sp{BubbleSpec{1.0, kPair[0], 0.3, {0, 0}}, BubbleSpec{1.0, kPair[1], -0.7, {0, 0}}};
  const auto p0 = boundary_parameters(sp, 1.0, 0.5);
  const auto v = eval_pseudoconformal(sp, gs1(), g, 1.0, 0.5) + z;
  const auto row = fit_parameters(v, z, p0, gs1(), loc, 1.0);
  CHECK(row.converged);
  CHECK(row.iterations <= 2);
  CHECK(row.D < 1e-8);
  const auto a = pack(p0, 1), b = pack(row.params, 1);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-8);
  for (double r : row.residuals) CHECK(std::abs(r) < 1e-9);
  const auto R = remainder(v, z, row.params, gs1());
  CHECK(std::abs(remainder_size(R, 1.0, 0.5) - row.D) < 1e-12);
}

TEST_CASE("round trip on random parameters") {
  auto g = make_grid(1, 16.0, 2048);
  const auto z = residue(g);
  const auto loc = build_localizers(kPair, g);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ModulationState p;
    p.t = 0.5;
    for (const auto& x : kPair)
      p.bubbles.push_back(BubbleParams{0.5 + 0.3 * u(rng), {x[0] + 0.3 * u(rng), 0}, {0.5 * u(rng), 0}, 0.5 * u(rng), kPi * u(rng)});
    const auto v = eval_modulated_sum(p, gs1(), g) + z;
    ModulationState guess = p;
    for (auto& b : guess.bubbles) {
      b.lambda *= 1.0 + 0.1 * u(rng);
      b.alpha[0] += 0.1 * u(rng);
    }
    const auto row = fit_parameters(v, z, guess, gs1(), loc, 1.0);
    REQUIRE(row.converged);
    const auto a = pack(p, 1), b = pack(row.params, 1);
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(std::remainder(a[i] - b[i], i % 5 == 4 ? 2 * kPi : 1e300)));
    CHECK(err < 1e-8);
  }
}

TEST_CASE("fit under injected noise") {
  auto g = make_grid(1, 16.0, 2048);
  const auto z = residue(g);
  const auto loc = build_localizers(kPair, g);
  ModulationState p;
  p.t = 0.6;
  p.bubbles = {BubbleParams{0.4, kPair[0], {0, 0}, 0.4, 0.2}, BubbleParams{0.4, kPair[1], {0, 0}, 0.4, 1.1}};
  auto noise = ComplexField::from_function(g, [](const Point& x) {
    return cplx(std::cos(0.7 * x[0]) * std::exp(-x[0] * x[0] / 50.0), std::sin(0.4 * x[0]) * std::exp(-x[0] * x[0] / 60.0));
  });
  noise *= 1e-4;
  const auto v = eval_modulated_sum(p, gs1(), g) + z + noise;
  const auto row = fit_parameters(v, z, p, gs1(), loc, 1.0);
  CHECK(row.converged);
  CHECK(row.D < 2.0 * remainder_size(noise, 1.0, 0.6));
}

TEST_CASE("modulation vector") {
  // The three-point theta rate errs by about (h / (T - t))^2 after the lambda^2
  // weight, so T - t stays near 1.5 to keep it below 1e-6.
  const double T = 2.0, w = 1.3, vt = 0.4;
  auto exact = [&](double t) {
    ModulationState s;
    s.t = t;
    const double tau = T - t;
    s.bubbles = {BubbleParams{w * tau, {2.0, 0}, {0, 0}, w * w * tau, 1.0 / (w * w * tau) + vt}};
    return s;
  };
  std::vector<DecompositionRow> rows;
  for (int i = 0; i <= 50; ++i) {
    DecompositionRow r;
    r.t = 0.5 + 1e-3 * i;
    r.params = exact(r.t);
    r.converged = true;
    rows.push_back(r);
  }
  modulation_vector(rows, 1);
  for (const auto& r : rows) CHECK(r.mod[0] < 1e-6);

  for (auto& r : rows) r.params = exact(0.5);
  modulation_vector(rows, 1);
  for (const auto& r : rows) CHECK(r.mod[0] >= exact(0.5).bubbles[0].gamma);
  rows.resize(2);
  CHECK_THROWS(modulation_vector(rows, 1));
}

TEST_CASE("localized mass") {
  auto g = make_grid(1, 16.0, 4096);
  const auto loc = build_localizers(kPair, g);
  ModulationState p;
  p.bubbles = {BubbleParams{0.3, kPair[0], {0, 0}, 0.2, 0.3}, BubbleParams{0.3, kPair[1], {0, 0}, 0.1, 0.9}};
  const auto prof = eval_modulated(p, gs1(), g);
  const auto zero = localized_mass(ComplexField(g), prof, loc);
  CHECK(zero[0] == 0.0);
  const double c = 1e-3;
  const auto R = c * prof.bubbles[0].u;
  const auto m = localized_mass(R, prof, loc);
  ComplexField uphi = prof.bubbles[0].u;
  uphi.multiply(loc.phi[0]);
  const double want = 2.0 * c * gs1().mass_q + c * c * std::norm(l2_norm(uphi));
  CHECK(std::abs(m[0] - want) < 1e-8);
}

TEST_CASE("scal and renormalization") {
  const auto& gs = gs1();
  auto g = make_grid(1, 30.0, 2048);
  const auto ns = null_space_fields(gs, g);
  CHECK(scal(ComplexField(g), ns) == 0.0);

  std::vector<double> q2, r2q2, dq2;
  for (int i = 0; i <= gs.samples; ++i) {
    const double r = i * gs.h;
    q2.push_back(gs.q[i] * gs.q[i]);
    r2q2.push_back(r * r * gs.q[i] * gs.q[i]);
    dq2.push_back(gs.dq[i] * gs.dq[i]);
  }
  const double a = simpson_even(q2, gs.h), b = simpson_even(r2q2, gs.h);
  CHECK(std::abs(scal(ns.q, ns) - (a * a + b * b)) < 1e-8 * (a * a + b * b));

  const auto idq = cplx(0.0, 1.0) * ns.grad_q[0];
  const double c = simpson_even(dq2, gs.h);
  CHECK(std::abs(scal(idq, ns) - c * c) < 1e-8 * c * c);

  auto g2 = make_grid(1, 16.0, 2048);
  BubbleParams bp{0.4, {3.0, 0}, {0.2, 0}, 0.3, 0.8};
  auto Rk = ComplexField::from_function(g2, [&](const Point& x) {
    return cplx(std::exp(-(x[0] - 3.0) * (x[0] - 3.0)), 0.3 * std::exp(-(x[0] - 2.5) * (x[0] - 2.5)));
  });
  const auto eps = renormalize(Rk, bp);
  CHECK(std::abs(l2_norm(eps) - l2_norm(Rk)) < 1e-10);
  ModulationState ps;
  ps.bubbles = {bp};
  const auto uk = eval_modulated_sum(ps, gs, g2);
  const auto e_u = renormalize(uk, bp);
  const auto direct = ComplexField::from_function(e_u.grid_ptr(), [&](const Point& y) {
    return gs.ground(std::abs(y[0])).value * std::polar(1.0, bp.beta[0] * y[0] - 0.25 * bp.gamma * y[0] * y[0]);
  });
  CHECK((e_u - direct).max_abs() < 1e-9);
}
