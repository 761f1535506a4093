#include <cmath>

#include "bwlab/diagnostics.hpp"
#include "bwlab/groundstate.hpp"
#include "doctest.h"

using namespace bwlab;

namespace {

const GroundStateTable& gs1() {
  static const GroundStateTable t = solve_rho(solve_ground_state(1));
  return t;
}
const GroundStateTable& gs2() {
  static const GroundStateTable t = solve_rho(solve_ground_state(2));
  return t;
}

}  // namespace

TEST_CASE("d=1 ground state constants") {
  const auto& gs = gs1();
  CHECK(gs.q0 == doctest::Approx(std::pow(3.0, 0.25)).epsilon(1e-12));
  CHECK(gs.mass_q == doctest::Approx(std::sqrt(3.0) * kPi / 2.0).epsilon(1e-10));
  CHECK(gs.equation_residual() < 1e-9);
}

TEST_CASE("shooting reproduces the closed form in d=1") {
  const auto s = shoot_ground_state(1, 30.0, 6000);
  double err = 0.0;
  for (int i = 0; i <= s.samples; ++i) {
    const double r = i * s.h;
    err = std::max(err, std::abs(s.q[i] - std::pow(3.0, 0.25) / std::sqrt(std::cosh(2.0 * r))));
  }
  CHECK(err < 1e-8);
}

TEST_CASE("d=2 ground state") {
  const auto& gs = gs2();
  CHECK(gs.q0 == doctest::Approx(2.2062).epsilon(1e-4));
  CHECK(gs.mass_q == doctest::Approx(11.70).epsilon(2e-3));
  CHECK(gs.equation_residual() < 1e-9);
  bool positive_decreasing = true;
  for (int i = 1; i <= gs.samples; ++i) positive_decreasing = positive_decreasing && gs.q[i] > 0.0 && gs.q[i] < gs.q[i - 1];
  CHECK(positive_decreasing);
  CHECK(gs.q.back() < 1e-9);
  const auto fine = solve_ground_state(2, 30.0, 12000);
  CHECK(std::abs(fine.mass_q - gs.mass_q) / gs.mass_q < 1e-8);
}

TEST_CASE("rho solves L+ rho = -r^2 Q and decays") {
  for (const auto* gs : {&gs1(), &gs2()}) {
    CHECK(gs->has_rho);
    CHECK(gs->rho_residual() < 1e-7);
    CHECK(std::abs(gs->profile_rho(gs->r_max / 2).value) < 1e-3);
    CHECK(std::abs(gs->rho.back()) < 1e-6);
  }
  auto rq = [](int m) {
    const auto t = solve_rho(solve_ground_state(1, 30.0, m));
    double s = 0.0;
    for (int i = 0; i <= t.samples; ++i) s += (i == 0 || i == t.samples ? 1.0 : 2.0) * t.rho[i] * t.q[i];
    return s * t.h;  // <rho, Q> on R (even integrand)
  };
  const double a = rq(4000), b = rq(8000);
  CHECK(std::abs(a - b) / std::abs(b) < 1e-5);
}

TEST_CASE("linearized operators on the kernel") {
  const auto& gs = gs1();
  auto g = make_grid(1, 40.0, 4096);
  const auto ns = null_space_fields(gs, g);
  CHECK(apply_linearized(Linearized::minus, gs, ns.q).max_abs() < 1e-8);
  CHECK(apply_linearized(Linearized::plus, gs, ns.grad_q[0]).max_abs() < 1e-7);
  CHECK((apply_linearized(Linearized::plus, gs, ns.lambda_q) + cplx(2.0) * ns.q).max_abs() < 1e-7);
}

TEST_CASE("kernel identities") {
  const auto k1 = check_kernel_identities(gs1(), make_grid(1, 40.0, 4096));
  CHECK(k1.pass(1e-6));
  const auto k2 = check_kernel_identities(gs2(), make_grid(2, 25.0, 512));
  CHECK(k2.pass(1e-5));

  GroundStateTable bad = gs1();
  for (auto* v : {&bad.q, &bad.dq, &bad.d2q})
    for (double& x : *v) x *= 1.01;
  bad.prepare();
  CHECK(check_kernel_identities(bad, make_grid(1, 40.0, 4096)).lminus_q > 1e-3);
}

TEST_CASE("energy of Q vanishes") {
  auto g1 = make_grid(1, 20.0, 2048);
  CHECK(std::abs(energy(null_space_fields(gs1(), g1).q)) < 1e-6);
  auto g2 = make_grid(2, 20.0, 256);
  CHECK(std::abs(energy(null_space_fields(gs2(), g2).q)) < 1e-6);
}

TEST_CASE("localized coercivity") {
  const auto& gs = gs1();
  auto g = make_grid(1, 40.0, 4096);
  const auto ns = null_space_fields(gs, g);
  const double A = 20.0;
  // Q spans one of the directions, so its projection vanishes; Q^2 does not.
  CHECK(l2_norm(orthogonalize_null_space(ns.q, ns)) < 1e-10 * l2_norm(ns.q));
  ComplexField q2 = ns.q;
  for (std::size_t i = 0; i < q2.size(); ++i) q2[i] *= ns.q[i];
  CHECK(coercivity_terms(gs, orthogonalize_null_space(q2, ns), A).ratio() > 0.0);
  double lo = 1.0;
  for (std::uint64_t s = 1; s <= 100; ++s) lo = std::min(lo, coercivity_sample(gs, g, A, s));
  CHECK(lo > 1e-3);
  CHECK(coercivity_terms(gs, ns.q, A).ratio() <= 0.0);
  CHECK(lowest_eigenvalue_plus(gs, g).eigenvalue < 0.0);
  CHECK(scal(orthogonalize_null_space(random_test_function(g, 3), ns), ns) < 1e-20);
}
