#include <cmath>
#include <fstream>
#include <sstream>

#include "bwlab/pipeline.hpp"
#include "doctest.h"

using namespace bwlab;
namespace fs = std::filesystem;

namespace {

Scenario small_scenario() {
  Scenario s = default_scenario();
  s.name = "small";
  s.n = 2048;
  s.dt = 1e-4;
  s.n_max = 2;
  s.samples_per_step = 5;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("bwlab_test_" + leaf);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("scenario schema") {
  const Scenario d = default_scenario();
  const Scenario back = parse_scenario(scenario_to_json(d));
  CHECK(back.hash() == d.hash());
  CHECK(d.kappa() == doctest::Approx(3.0));  // min(4 + 1/2 - 1, 5 - 2)
  CHECK(d.frequency_spread() == 0.0);
  CHECK(d.inverse_separation() == doctest::Approx(0.125));
  CHECK(d.warnings().empty());

  try {
    parse_scenario(R"({"d": 3, "bubbles": [{"x": [0], "w": -1}], "grid": {"N": 100, "Q": 1}, "bogus": 1})");
    FAIL("expected a schema error");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("/d") != std::string::npos);
    CHECK(msg.find("/bogus: unknown key") != std::string::npos);
    CHECK(msg.find("/grid/N") != std::string::npos);
    CHECK(msg.find("/grid/Q: unknown key") != std::string::npos);
    CHECK(msg.find("/bubbles/0/w") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario("{not json"), InvalidArgument);

  Scenario weak = d;
  weak.noise.flatness = 3;
  weak.residue.m = 2;
  CHECK(weak.warnings().size() == 2u);
}

TEST_CASE("construction times") {
  const Scenario s = small_scenario();
  const auto t2 = construction_times(s, 2);
  CHECK(t2.front() == s.t_star);
  CHECK(std::abs(t2.back() - s.schedule_time(2)) < 1e-15);
  for (std::size_t i = 1; i < t2.size(); ++i) CHECK(t2[i] > t2[i - 1]);
  for (double t : construction_times(s, 1)) {
    bool found = false;
    for (double u : t2) found = found || std::abs(u - t) < 1e-14;
    CHECK(found);
  }
}

TEST_CASE("single exact bubble is reproduced by the construction") {
  Scenario s = small_scenario();
  s.name = "single";
  s.bubbles = {BubbleSpec{}};
  s.noise.count = 0;
  s.residue.alpha_star = 0.0;
  const Experiment ex = prepare_experiment(s);
  const auto res = construct_approximation(ex, 2);
  REQUIRE(res.has_mod);
  for (const auto& r : res.rows) {
    CHECK(r.converged);
    CHECK(r.D < 1e-5);
  }
  CHECK(res.rows.back().D < 1e-8);
}

TEST_CASE("construction artifacts are reproducible and self-describing") {
  const Scenario s = small_scenario();
  const Experiment ex = prepare_experiment(s);
  const auto a = scratch("run_a"), b = scratch("run_b");
  const auto res = construct_approximation(ex, 1);
  write_construction(a, ex, res);
  write_construction(b, ex, construct_approximation(prepare_experiment(s), 1));
  CHECK(slurp(a / "series.csv") == slurp(b / "series.csv"));
  CHECK(slurp(a / "diagnostics.csv") == slurp(b / "diagnostics.csv"));
  CHECK(fs::exists(a / "meta.json"));
  CHECK(slurp(a / "meta.json").find(s.hash()) != std::string::npos);

  for (const auto& r : res.rows) CHECK(r.converged);
  CHECK(res.rows.back().D < 1e-8);

  const std::string before = slurp(a / "series.csv");
  rediagnose_run(a);
  CHECK(slurp(a / "series.csv") == before);
  CHECK(slurp(a / "diagnostics.csv") == slurp(b / "diagnostics.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("sweep writes consecutive comparisons") {
  Scenario s = small_scenario();
  s.n_max = 1;
  const Experiment ex = prepare_experiment(s);
  const auto res = sweep(ex, 2);
  CHECK(res.runs.size() == 2u);
  CHECK(res.sup_difference.size() == 1u);
  const auto dir = scratch("sweep");
  write_sweep(dir, ex, res);
  const std::string cmp = slurp(dir / "comparisons.csv");
  CHECK(cmp.rfind("n,t,l2,h1\n", 0) == 0);
  CHECK(cmp.find("\n0,") != std::string::npos);
  CHECK(fs::exists(dir / "n_1" / "meta.json"));
  CHECK(fs::exists(dir / "summary.json"));
  fs::remove_all(dir);
}
