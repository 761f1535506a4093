#include <cmath>
#include <random>

#include "bwlab/profiles.hpp"
#include "doctest.h"

using namespace bwlab;

namespace {

const GroundStateTable& gs1() {
  static const GroundStateTable t = solve_rho(solve_ground_state(1));
  return t;
}

}  // namespace

TEST_CASE("pseudo-conformal bubble") {
  const auto& gs = gs1();
  auto g = make_grid(1, 20.0, 4096);
  const std::vector<BubbleSpec> one{BubbleSpec{}};
  const double mq = std::sqrt(gs.mass_q);
  // ||grad S||^2 = ||Q'||^2 / (T-t)^2 + ||yQ||^2 / 4
  double dq2 = -1.0;
  for (double t : {0.0, 0.3, 0.6, 0.8}) {
    const auto s = eval_pseudoconformal(one, gs, g, 1.0, t);
    const double tau = 1.0 - t;
    CHECK(std::abs(l2_norm(s) - mq) / mq < 1e-9);
    const double g2 = std::pow(gradient_norm(s), 2);
    if (dq2 < 0) dq2 = g2 - gs.yq2 / 4.0;
    CHECK(std::abs(g2 - (dq2 / (tau * tau) + gs.yq2 / 4.0)) / g2 < 1e-8);
  }
  g = make_grid(1, 10.0, 2048);
  const auto s0 = eval_pseudoconformal(one, gs, g, 1.0, 0.0);
  CHECK(std::abs(s0[1024] - std::pow(3.0, 0.25) * std::polar(1.0, 1.0)) < 1e-12);
  CHECK_THROWS_AS(eval_pseudoconformal(one, gs, g, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(eval_pseudoconformal(one, gs, g, 1.0, 0.99), ResolutionError);
}

TEST_CASE("bubble specs are validated") {
  CHECK_THROWS_AS(validate_bubbles({BubbleSpec{0.0, {0, 0}, 0, {0, 0}}}, 1), InvalidArgument);
  CHECK_THROWS_AS(validate_bubbles({BubbleSpec{}, BubbleSpec{}}, 1), InvalidArgument);
  CHECK_NOTHROW(validate_bubbles({BubbleSpec{1, {-4, 0}, 0, {0, 0}}, BubbleSpec{1, {4, 0}, 0, {0, 0}}}, 1));
}

TEST_CASE("soliton") {
  const auto& gs = gs1();
  auto g = make_grid(1, 20.0, 1024);
  BubbleSpec w;
  w.phase = 0.7;
  const auto f = eval_soliton({w}, gs, g, 0.0);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    err = std::max(err, std::abs(f[i] - gs.ground(std::abs(g->coord(i))).value * std::polar(1.0, 0.7)));
  CHECK(err < 1e-14);
  w.c = {0.8, 0.0};
  w.w = 1.3;
  CHECK(std::abs(l2_norm(eval_soliton({w}, gs, g, 2.0)) - std::sqrt(gs.mass_q)) < 1e-9);
}

TEST_CASE("modulated profile") {
  const auto& gs = gs1();
  auto g = make_grid(1, 16.0, 2048);
  SUBCASE("identity parameters give Q") {
    ModulationState s;
    s.bubbles = {BubbleParams{}};
    const auto u = eval_modulated_sum(s, gs, g);
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(u[i] - gs.ground(std::abs(g->coord(i))).value));
    CHECK(err < 1e-15);
  }
  SUBCASE("boundary parameters reproduce S") {
    const std::vector<BubbleSpec> sp{BubbleSpec{1.0, {-4, 0}, 0.3, {0, 0}}, BubbleSpec{1.4, {4, 0}, -1.0, {0, 0}}};
    const auto p = boundary_parameters(sp, 1.0, 0.6);
    CHECK((eval_modulated_sum(p, gs, g) - eval_pseudoconformal(sp, gs, g, 1.0, 0.6)).max_abs() < 1e-8);
  }
  SUBCASE("analytic derivative fields match spectral ones; L2 invariance") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      ModulationState s;
      s.bubbles = {BubbleParams{0.6 + 0.3 * u(rng), {u(rng), 0}, {u(rng), 0}, u(rng), 3 * u(rng)}};
      const auto prof = eval_modulated(s, gs, g);
      const auto& b = prof.bubbles[0];
      CHECK(std::abs(l2_norm(b.u) - std::sqrt(gs.mass_q)) < 1e-9);
      CHECK((spectral_gradient(b.u)[0] - b.grad_u[0]).max_abs() < 1e-8);
      CHECK((spectral_scaling_generator(b.u, s.bubbles[0].alpha) - b.lambda_u).max_abs() < 1e-8);
    }
  }
}

TEST_CASE("bubble interaction decays with the scale") {
  const auto& gs = gs1();
  auto g = make_grid(1, 16.0, 4096);
  for (double tau : {0.3, 0.2, 0.1}) {
    ModulationState s;
    s.bubbles = {BubbleParams{tau, {-1.0, 0}, {0, 0}, tau, 0}, BubbleParams{tau, {1.0, 0}, {0, 0}, tau, 0.5}};
    const auto p = eval_modulated(s, gs, g, false);
    CHECK(std::abs(inner_product(p.bubbles[0].u, p.bubbles[1].u)) < 10.0 * std::exp(-1.0 / tau));
  }
}

TEST_CASE("pseudo-conformal transform pair") {
  const auto& gs = gs1();
  auto g = make_grid(1, 10.0, 1024);
  BubbleSpec w{1.2, {0, 0}, 0.4, {0.5, 0}};
  const SolitonSampler sol({w}, gs);
  BubbleSpec s = w;
  s.x = w.c;
  s.c = {0, 0};
  const double T = 1.3, t = 0.7;
  const auto ct = pseudoconformal_transform(sol, T, t, g);
  CHECK((ct - eval_pseudoconformal({s}, gs, g, T, t)).max_abs() < 1e-9);
  CHECK(std::abs(l2_norm(ct) - l2_norm(eval_soliton({w}, gs, make_grid(1, 40.0, 4096), 1.0 / (T - t)))) < 1e-9);

  // C_T^{-1} of the exact C_T(W) trajectory is W again.
  const PseudoconformalSampler bubble({s}, gs, T);
  const double tt = 1.0 / (T - t);
  CHECK((inverse_pseudoconformal_transform(bubble, T, tt, g) - eval_soliton({w}, gs, g, tt)).max_abs() < 1e-9);
}

TEST_CASE("stored trajectory interpolates linearly in time") {
  auto g = make_grid(1, 5.0, 64);
  StoredTrajectory tr;
  tr.add(1.0, ComplexField::from_function(g, [](const Point&) { return cplx(2.0, 0.0); }));
  tr.add(0.0, ComplexField::from_function(g, [](const Point&) { return cplx(0.0, 1.0); }));
  CHECK(tr.t_min() == 0.0);
  CHECK(tr.t_max() == 1.0);
  CHECK(std::abs(tr.at(0.25)[3] - cplx(0.5, 0.75)) < 1e-15);
  CHECK(tr.at(1.0)[0] == cplx(2.0, 0.0));
}
