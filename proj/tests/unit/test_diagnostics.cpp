#include <cmath>
#include <random>

#include "bwlab/diagnostics.hpp"
#include "bwlab/evolution.hpp"
#include "doctest.h"

using namespace bwlab;

namespace {

const GroundStateTable& gs1() {
  static const GroundStateTable t = solve_rho(solve_ground_state(1));
  return t;
}

const std::vector<Point> kPair{{-4.0, 0.0}, {4.0, 0.0}};

PerturbationModel noisy_model(const GridPtr& g, double amplitude, std::uint64_t seed) {
  FlatBuilderOptions fo;
  fo.singularities = kPair;
  fo.amplitude = amplitude;
  return PerturbationModel(g, {build_flat_spatial(fo, 1)}, sample_brownian(1, uniform_nodes(0.0, 1.0, 1e-3), seed), 5);
}

}  // namespace

TEST_CASE("energy") {
  auto g = make_grid(1, 10.0, 2048);
  const auto s = eval_pseudoconformal({BubbleSpec{}}, gs1(), g, 1.0, 0.7);
  CHECK(std::abs(energy(s) - gs1().yq2 / 8.0) < 1e-6);

  const double a = 0.3, k = 2.0 * kPi / 10.0;
  auto pw = ComplexField::from_function(g, [&](const Point& x) { return a * std::polar(1.0, k * x[0]); });
  const double vol = 20.0;
  const double want = 0.5 * a * a * k * k * vol - (1.0 / 6.0) * std::pow(a, 6.0) * vol;
  CHECK(std::abs(energy(pw) - want) < 1e-10);
}

TEST_CASE("nonlinearity and potential") {
  const cplx v(0.3, -0.4);
  CHECK(std::abs(nonlinearity(v, 1) - std::pow(0.5, 4) * v) < 1e-15);
  CHECK(std::abs(nonlinearity(v, 2) - 0.25 * v) < 1e-15);
  CHECK(potential_density(v, 1) == doctest::Approx(std::pow(0.5, 6) / 6.0));
  CHECK(potential_density(v, 2) == doctest::Approx(std::pow(0.5, 4) / 4.0));
}

TEST_CASE("energy variation") {
  auto g = make_grid(1, 16.0, 2048);
  const auto v0 = eval_pseudoconformal({BubbleSpec{1.0, kPair[0], 0.0, {0, 0}}, BubbleSpec{1.0, kPair[1], 0.0, {0, 0}}},
                                       gs1(), g, 1.0, 0.5);
  FlatBuilderOptions fo;
  fo.singularities = kPair;
  PerturbationModel zero(g, {build_flat_spatial(fo, 1)}, {PiecewiseLinearPath::constant(0.0, 1.0, 0.0)}, 5);
  CHECK(energy_variation_rhs(v0, zero, 0.5) == 0.0);

  // Centered differences inside one path segment, for v and for a second field z.
  const auto model = noisy_model(g, 0.25, 17);
  auto zf = ComplexField::from_function(g, [](const Point& x) { return cplx(0.2 * std::exp(-x[0] * x[0] / 4.0), 0.0); });
  const double c = 0.5105, delta = 1e-4;
  IntegrateOptions o;
  o.dt = 5e-5;
  o.sample_times = {c - delta, c, c + delta};
  std::vector<double> ev, ez, rv, rz;
  integrate(EvolutionState{v0, 0.5, {}}, c + delta, model, o, [&](const EvolutionState& e) {
    ev.push_back(energy(e.field));
    rv.push_back(energy_variation_rhs(e.field, model, e.t));
  });
  integrate(EvolutionState{zf, 0.5, {}}, c + delta, model, o, [&](const EvolutionState& e) {
    ez.push_back(energy(e.field));
    rz.push_back(energy_variation_rhs(e.field, model, e.t));
  });
  REQUIRE(ev.size() == 3u);
  REQUIRE(ez.size() == 3u);
  const double fd = (ev[2] - ev[0]) / (2.0 * delta);
  REQUIRE(std::abs(rv[1]) > 1e-6);
  CHECK(std::abs(fd - rv[1]) < 1e-2 * std::abs(rv[1]));
  const double fd_diff = (ev[2] - ez[2] - ev[0] + ez[0]) / (2.0 * delta);
  const double diff = rv[1] - rz[1];
  CHECK(std::abs(fd_diff - diff) < 1e-2 * std::abs(diff));
}

TEST_CASE("cutoff chi") {
  const CutoffChi chi(20.0);
  const auto rep = check_cutoff(chi, 10000, 10.0);
  CHECK(rep.min_convexity >= -1e-12);
  CHECK(std::isfinite(rep.ratio_bound));
  CHECK(rep.min_second > 0.0);
  for (double r : {1.0, 2.0}) {
    const auto lo = chi.psi(r - 1e-9), hi = chi.psi(r + 1e-9);
    CHECK(std::abs(lo.d1 - hi.d1) < 1e-7);
    CHECK(std::abs(lo.d2 - hi.d2) < 1e-6);
  }
  CHECK(chi.psi(0.5).d1 == doctest::Approx(0.5));
  CHECK(chi.psi(3.0).d1 == doctest::Approx(2.0 - std::exp(-3.0)));
  const Point gy = chi.grad_chi_A({10.0, 0.0}, 1);
  CHECK(gy[0] == doctest::Approx(20.0 * chi.psi(0.5).d1));
}

TEST_CASE("generalized energy vanishes with the remainder") {
  auto g = make_grid(1, 16.0, 2048);
  const auto loc = build_localizers(kPair, g);
  ModulationState p;
  p.t = 0.5;
  p.bubbles = {BubbleParams{0.5, kPair[0], {0, 0}, 0.5, 0.0}, BubbleParams{0.5, kPair[1], {0, 0}, 0.5, 1.0}};
  const auto u = eval_modulated_sum(p, gs1(), g);
  const CutoffChi chi;
  CHECK(generalized_energy(ComplexField(g), p, ComplexField(g), u, loc, chi) == 0.0);

  // Exact single-bubble run: fitted R is integrator-sized, I is quadratic in it.
  auto g1 = make_grid(1, 10.0, 2048);
  const std::vector<BubbleSpec> one{BubbleSpec{}};
  const auto loc1 = build_localizers({{0.0, 0.0}}, g1);
  PerturbationModel free(g1);
  IntegrateOptions o;
  o.dt = 2e-4;
  o.sample_times = {0.6, 0.7, 0.8};
  integrate(EvolutionState{eval_pseudoconformal(one, gs1(), g1, 1.0, 0.5), 0.5, {}}, 0.8, free, o,
            [&](const EvolutionState& e) {
              const auto guess = boundary_parameters(one, 1.0, e.t);
              const auto row = fit_parameters(e.field, ComplexField(g1), guess, gs1(), loc1, 1.0);
              REQUIRE(row.converged);
              const auto R = remainder(e.field, ComplexField(g1), row.params, gs1());
              CHECK(std::abs(generalized_energy(R, row.params, ComplexField(g1), e.field, loc1, chi)) < 1e-8);
            });
}

TEST_CASE("eta on exact parameters and under an injected rate error") {
  auto g = make_grid(1, 10.0, 2048);
  const std::vector<BubbleSpec> one{BubbleSpec{1.0, {0, 0}, 0.2, {0, 0}}};
  const double T = 1.0, t = 0.7, tau = T - t;
  const auto p = boundary_parameters(one, T, t);
  ModulationState rate;
  rate.t = t;
  rate.bubbles = {BubbleParams{-1.0, {0, 0}, {0, 0}, -1.0, 1.0 / (tau * tau)}};
  PerturbationModel free(g);
  const ComplexField z(g);
  const auto base = eta_residual(p, rate, free, gs1(), z);
  CHECK(base.total < 1e-6);
  CHECK(base.split_defect < 1e-10);

  // d(eta_1)/d(lambda rate) = i dU/dlambda, whose norm is lambda^{-1} ||Lambda Q - i gamma |y|^2 Q / 2||.
  const auto& gs = gs1();
  double lq2 = 0.0, y4q2 = 0.0;
  for (int i = 0; i <= gs.samples; ++i) {
    const double r = i * gs.h, w = (i == 0 || i == gs.samples) ? 1.0 : 2.0;
    const double lq = 0.5 * gs.q[i] + r * gs.dq[i];
    lq2 += w * lq * lq;
    y4q2 += w * std::pow(r, 4) * gs.q[i] * gs.q[i];
  }
  lq2 *= gs.h;
  y4q2 *= gs.h;
  const auto& b = p.bubbles[0];
  const double slope = std::sqrt(lq2 + 0.25 * b.gamma * b.gamma * y4q2) / b.lambda;
  for (double e : {1e-3, 1e-2}) {
    ModulationState r2 = rate;
    r2.bubbles[0].lambda += e;
    const auto rep = eta_residual(p, r2, free, gs, z);
    CHECK(std::abs(rep.parts[0] / e - slope) < 0.1 * slope);
  }
}

TEST_CASE("rate fit") {
  std::vector<double> t, y2, y3;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 12; ++i) {
    const double tt = 1.0 - 0.5 * std::pow(0.75, i);
    t.push_back(tt);
    y2.push_back(std::pow(1.0 - tt, 2.0));
    y3.push_back(std::pow(1.0 - tt, 3.0) * (1.0 + 0.05 * n01(rng)));
  }
  const auto f2 = rate_fit(t, y2, 1.0);
  CHECK(std::abs(f2.slope - 2.0) < 1e-10);
  CHECK(f2.r2 == doctest::Approx(1.0));
  CHECK(std::abs(rate_fit(t, y3, 1.0).slope - 3.0) < 0.2);
  CHECK_THROWS_AS(rate_fit({0.1, 0.2, 0.3}, {1, 1, 1}, 1.0), InvalidArgument);
  y2[3] = 0.0;
  CHECK_THROWS_AS(rate_fit(t, y2, 1.0), InvalidArgument);
}

TEST_CASE("mass quantization") {
  auto g = make_grid(1, 16.0, 4096);
  const std::vector<BubbleSpec> sp{BubbleSpec{1.0, kPair[0], 0.0, {0, 0}}, BubbleSpec{1.0, kPair[1], 0.5, {0, 0}}};
  const auto s = eval_pseudoconformal(sp, gs1(), g, 1.0, 0.9);
  const auto mq = mass_quantization(s, kPair, 1.0);
  for (double b : mq.ball) CHECK(std::abs(b - gs1().mass_q) < 1e-4);

  FlatBuilderOptions fo;
  fo.singularities = kPair;
  fo.order = 8;
  fo.width = 2.0;
  const auto z = build_regular_residue(fo, 4, 1e-3, g);
  const auto mz = mass_quantization(z, kPair, 1.0);
  const double z2 = std::norm(l2_norm(z));
  for (double b : mz.ball) CHECK(b < 1e-3 * z2 + 1e-300);
  CHECK(std::abs(mz.exterior - z2) <= 1e-3 * z2);

  const auto both = mass_quantization(s + z, kPair, 1.0);
  for (double b : both.ball) CHECK(std::abs(b - gs1().mass_q) < 1e-3);
  CHECK(std::abs(both.exterior - z2) < 1e-3);

  CHECK_THROWS_AS(mass_quantization(s, {{0.0, 0.0}, {1.0, 0.0}}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(mass_quantization(s, {{15.5, 0.0}}, 1.0), InvalidArgument);
}

TEST_CASE("budgets") {
  BudgetInputs in;
  in.T = 1.0;
  in.t = 0.8;
  in.params.bubbles = {BubbleParams{0.2, {0, 0}, {0, 0}, 0.2, 0.0}};
  in.rates.bubbles = {BubbleParams{-1.0, {0, 0}, {0, 0}, -1.0, 25.0}};
  in.mod = {0.0};
  in.local_mass = {0.0};
  const BudgetConstants c;
  CHECK(lower_bound_budget(in, c) == doctest::Approx(std::exp(-5.0)));
  CHECK(error_budget(in, c) == doctest::Approx(std::exp(-5.0)));
  in.D = 1e-3;
  in.local_mass = {1e-4};
  CHECK(error_budget(in, c) > std::exp(-5.0));
  CHECK(lower_bound_budget(in, c) == doctest::Approx(1e-8 / 0.04 + std::exp(-5.0)));
  in.t = 1.0;
  CHECK_THROWS_AS(error_budget(in, c), InvalidArgument);
}
