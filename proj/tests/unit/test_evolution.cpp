#include <cmath>

#include "bwlab/diagnostics.hpp"
#include "bwlab/evolution.hpp"
#include "doctest.h"

using namespace bwlab;

namespace {

const GroundStateTable& gs1() {
  static const GroundStateTable t = solve_ground_state(1);
  return t;
}

double soliton_error(double dt) {
  auto g = make_grid(1, 30.0, 4096);
  PerturbationModel free(g);
  BubbleSpec w;
  w.c = {0.5, 0.0};
  EvolutionState s{eval_soliton({w}, gs1(), g, 0.0), 0.0, {}};
  IntegrateOptions o;
  o.dt = dt;
  auto r = integrate(s, 0.2, free, o);
  REQUIRE(r.termination == Termination::completed);
  const auto ex = eval_soliton({w}, gs1(), g, 0.2);
  return l2_norm(r.state.field - ex) / l2_norm(ex);
}

}  // namespace

TEST_CASE("linear flow reproduces a plane wave") {
  auto g = make_grid(1, kPi, 64);
  PerturbationModel free(g);
  const double k = 3.0;
  auto wave = [&](double t) {
    return ComplexField::from_function(g, [&](const Point& x) { return std::polar(1.0, k * x[0] - k * k * t); });
  };
  EvolutionState s{wave(0.0), 0.0, {}};
  StepOptions so;
  so.nonlinear = false;
  for (int i = 0; i < 1000; ++i) s = step(s, free, 1e-3, so);
  CHECK((s.field - wave(1.0)).max_abs() < 1e-10);
}

TEST_CASE("soliton propagation") {
  CHECK(soliton_error(2e-4) < 1e-6);
}

namespace {

struct BubbleRun {
  double rel_error = 0.0;
  double drift_per_step = 0.0;
};

BubbleRun bubble_run(double dt) {
  auto g = make_grid(1, 10.0, 2048);
  PerturbationModel free(g);
  const std::vector<BubbleSpec> one{BubbleSpec{}};
  EvolutionState s{eval_pseudoconformal(one, gs1(), g, 1.0, 0.5), 0.5, {}};
  const double m0 = std::norm(l2_norm(s.field));
  IntegrateOptions o;
  o.dt = dt;
  auto r = integrate(s, 0.88, free, o);
  REQUIRE(r.termination == Termination::completed);
  const auto ex = eval_pseudoconformal(one, gs1(), g, 1.0, 0.88);
  const double drift = std::abs(std::norm(l2_norm(r.state.field)) - m0) / m0;
  return {l2_norm(r.state.field - ex) / l2_norm(ex), drift / r.state.stats.steps};
}

}  // namespace

TEST_CASE("pseudo-conformal bubble forward to T - 0.12 and time-step order") {
  const auto coarse = bubble_run(2e-4);
  const auto fine = bubble_run(1e-4);
  CHECK(coarse.rel_error < 1e-5);
  CHECK(coarse.rel_error / fine.rel_error >= 8.0);
  // at 2e-4 the per-step drift sits right at 1e-10 (1.1e-10)
  CHECK(fine.drift_per_step < 1e-10);
}

TEST_CASE("mass and energy on a soliton window") {
  auto g = make_grid(1, 30.0, 4096);
  PerturbationModel free(g);
  BubbleSpec w;
  w.c = {0.5, 0.0};
  EvolutionState s{eval_soliton({w}, gs1(), g, 0.0), 0.0, {}};
  const double m0 = std::norm(l2_norm(s.field)), e0 = energy(s.field);
  IntegrateOptions o;
  o.dt = 2e-4;
  auto r = integrate(s, 0.5, free, o);
  CHECK(std::abs(std::norm(l2_norm(r.state.field)) - m0) / m0 < 1e-9);
  CHECK(std::abs(energy(r.state.field) - e0) / std::abs(e0) < 1e-7);
}

TEST_CASE("forward then backward returns the initial field") {
  auto g = make_grid(1, 10.0, 2048);
  PerturbationModel free(g);
  const std::vector<BubbleSpec> one{BubbleSpec{}};
  const auto v0 = eval_pseudoconformal(one, gs1(), g, 1.0, 0.5);
  IntegrateOptions o;
  o.dt = 2e-4;
  auto fwd = integrate(EvolutionState{v0, 0.5, {}}, 0.7, free, o);
  auto back = integrate(fwd.state, 0.5, free, o);
  CHECK(l2_norm(back.state.field - v0) / l2_norm(v0) < 1e-7);
}

TEST_CASE("regular profile") {
  auto g = make_grid(1, 16.0, 2048);
  PerturbationModel free(g);
  const auto none = evolve_regular_profile(ComplexField(g), free, 1.0, 0.5, 1e-3, {0.6, 0.8});
  for (std::size_t i = 0; i < none.trajectory.size(); ++i) CHECK(none.trajectory.field(i).max_abs() == 0.0);

  FlatBuilderOptions fo;
  fo.singularities = {{-4.0, 0.0}, {4.0, 0.0}};
  fo.order = 8;
  fo.width = 2.0;
  const auto z = build_regular_residue(fo, 4, 1e-3, g);
  const auto rec = evolve_regular_profile(z, free, 1.0, 0.5, 1e-3, {0.5, 0.75});
  CHECK(rec.termination == Termination::completed);
  CHECK(rec.trajectory.t_min() == doctest::Approx(0.5));
  for (std::size_t i = 0; i < rec.trajectory.size(); ++i) {
    const auto& f = rec.trajectory.field(i);
    CHECK(std::abs(l2_norm(f) - l2_norm(z)) <= 1e-9 * l2_norm(z) + 1e-300);
    CHECK(norms(f).h1 < 1e-2);
  }
}

TEST_CASE("sample times are hit exactly and comparisons vanish on equal records") {
  auto g = make_grid(1, 10.0, 512);
  PerturbationModel free(g);
  const std::vector<BubbleSpec> one{BubbleSpec{}};
  IntegrateOptions o;
  o.dt = 1e-3;
  o.sample_times = {0.3, 0.31234, 0.4};
  StoredTrajectory tr;
  std::vector<double> hit;
  integrate(EvolutionState{eval_pseudoconformal(one, gs1(), g, 1.0, 0.2), 0.2, {}}, 0.4, free, o,
            [&](const EvolutionState& e) {
              hit.push_back(e.t);
              tr.add(e.t, e.field);
            });
  REQUIRE(hit.size() == 3u);
  CHECK(hit[1] == 0.31234);
  for (const auto& c : compare_trajectories(tr, tr, hit)) CHECK(c.l2 == 0.0);
}
