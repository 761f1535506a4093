// bwlab: scenario-driven runs of the multi-bubble construction.
// Exit codes: 0 success, 1 error, 2 acceptance failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "bwlab/acceptance.hpp"
#include "bwlab/diagnostics.hpp"
#include "bwlab/evolution.hpp"
#include "bwlab/groundstate.hpp"
#include "bwlab/pipeline.hpp"
#include "bwlab/scenario.hpp"

namespace fs = std::filesystem;
using namespace bwlab;

namespace {

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  int n = -1;
};

Scenario load(const Common& c) {
  Scenario s = c.scenario.empty() ? default_scenario() : load_scenario(c.scenario);
  if (c.seed) s.noise.seed = *c.seed;
  for (const auto& w : s.warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return s;
}

fs::path out_dir(const Common& c, const Scenario& s, const std::string& leaf) {
  if (!c.out.empty()) return c.out;
  return fs::path(s.output) / leaf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

int cmd_groundstate(const Common& c) {
  const Scenario s = load(c);
  const auto gs = solve_rho(solve_ground_state(s.dim));
  const auto grid = make_grid(s.dim, s.half_width, s.n);
  const fs::path dir = out_dir(c, s, "groundstate");
  write_ground_state(dir, gs, grid);
  nlohmann::json meta;
  meta["kind"] = "groundstate";
  meta["code_version"] = BWLAB_VERSION;
  meta["scenario"] = nlohmann::json::parse(scenario_to_json(s));
  meta["scenario_hash"] = s.hash();
  meta["seed"] = s.noise.seed;
  write_file(dir / "meta.json", meta.dump(2) + "\n");
  std::printf("d=%d  Q(0)=%.12f  ||Q||^2=%.12f  ||yQ||^2=%.12f  -> %s\n", s.dim, gs.q0, gs.mass_q,
              gs.yq2, dir.string().c_str());
  return 0;
}

// v(t*) = S(t*) + z(t*) forward to t_{n_max}, sampled at the construction times.
int cmd_evolve(const Common& c) {
  const Scenario s = load(c);
  const Experiment ex = prepare_experiment(s);
  const int n = c.n >= 0 ? c.n : s.n_max;
  const double t_end = s.schedule_time(n);
  const fs::path dir = out_dir(c, s, "evolve");
  fs::create_directories(dir / "fields");
  write_file(dir / "meta.json", meta_json(ex, n, "evolve"));

  EvolutionState st{eval_pseudoconformal(s.bubbles, ex.gs, ex.grid, s.T, s.t_star) +
                        ex.z.trajectory.at(s.t_star),
                    s.t_star, {}};
  IntegrateOptions io;
  io.dt = s.dt;
  io.sample_times = construction_times(s, n);
  std::string csv = "t,mass,h1,max_abs,steps,energy\n";
  std::size_t index = 0;
  auto res = integrate(st, t_end, *ex.model, io, [&](const EvolutionState& e) {
    char name[32];
    std::snprintf(name, sizeof name, "t_%04zu.nlsf", index++);
    write_snapshot(dir / "fields" / name, e.field, e.t);
    char line[256];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%ld,%.17g\n", e.t, e.stats.mass,
                  e.stats.h1, e.stats.max_abs, e.stats.steps, energy(e.field));
    csv += line;
  });
  write_file(dir / "stats.csv", csv);
  std::printf("%s at t=%.6f after %ld steps -> %s\n", to_string(res.termination).c_str(), res.state.t,
              res.state.stats.steps, dir.string().c_str());
  if (res.termination != Termination::completed) {
    std::fprintf(stderr, "error: %s\n", res.message.c_str());
    return 1;
  }
  return 0;
}

int cmd_construct(const Common& c) {
  const Scenario s = load(c);
  if (c.n < 0 || c.n > s.n_max) throw InvalidArgument("--n must lie in [0, n_max]");
  const Experiment ex = prepare_experiment(s);
  const auto res = construct_approximation(ex, c.n);
  const fs::path dir = out_dir(c, s, "n_" + std::to_string(c.n));
  write_construction(dir, ex, res);
  int conv = 0;
  for (const auto& r : res.rows) conv += r.converged;
  std::printf("n=%d t_n=%.6f rows=%zu converged=%d D(t*)=%.6e -> %s\n", res.n, res.t_n, res.rows.size(),
              conv, res.rows.front().D, dir.string().c_str());
  return 0;
}

int cmd_sweep(const Common& c) {
  const Scenario s = load(c);
  const Experiment ex = prepare_experiment(s);
  const auto res = sweep(ex, c.threads);
  const fs::path dir = out_dir(c, s, "sweep");
  write_sweep(dir, ex, res);
  for (std::size_t n = 0; n < res.runs.size(); ++n)
    std::printf("n=%zu  D(t*)=%.6e\n", n, res.D_at_t_star[n]);
  for (std::size_t n = 0; n < res.sup_difference.size(); ++n)
    std::printf("||v_%zu - v_%zu||: sup %.6e, at t* %.6e\n", n, n + 1, res.sup_difference[n],
                res.difference_at_t_star[n]);
  std::printf("D rate: slope %.4f r2 %.4f -> %s\n", res.D_rate.slope, res.D_rate.r2, dir.string().c_str());
  return 0;
}

int cmd_decompose(const Common& c) {
  if (c.out.empty()) throw InvalidArgument("decompose: --out must name a run directory");
  const auto rows = redecompose_run(c.out);
  int conv = 0;
  for (const auto& r : rows) conv += r.converged;
  std::printf("%zu rows, %d converged -> %s\n", rows.size(), conv, (fs::path(c.out) / "series.csv").string().c_str());
  return 0;
}

int cmd_diagnose(const Common& c) {
  if (c.out.empty()) throw InvalidArgument("diagnose: --out must name a run directory");
  rediagnose_run(c.out);
  std::printf("-> %s\n", (fs::path(c.out) / "diagnostics.csv").string().c_str());
  return 0;
}

int cmd_verify(const Common& c) {
  AcceptanceOptions opt;
  opt.scenario = load(c);
  opt.seed = c.seed.value_or(opt.scenario.noise.seed);
  opt.threads = c.threads;
  if (!c.out.empty()) opt.out = c.out;
  int failed = 0;
  const auto results = run_acceptance(opt, [&](const CriterionResult& r) {
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
    failed += !r.passed;
  });
  std::printf("%zu criteria, %d passed, %d failed\n", results.size(),
              static_cast<int>(results.size()) - failed, failed);
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bwlab: multi-bubble blow-up experiments"};
  app.set_version_flag("--version", BWLAB_VERSION);
  app.require_subcommand(1);
  Common c;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", c.scenario, "scenario JSON (default: built-in two-bubble d=1)");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", seed, "overrides the noise seed");
    sub->add_option("--threads", c.threads, "workers for sweep")->check(CLI::PositiveNumber);
  };
  auto* gs = app.add_subcommand("groundstate", "solve Q and rho, write tables");
  auto* ev = app.add_subcommand("evolve", "integrate S(t*) + z(t*) forward to t_n");
  auto* co = app.add_subcommand("construct", "build v_n backward from t_n and decompose it");
  auto* sw = app.add_subcommand("sweep", "all n, consecutive comparisons and the D rate fit");
  auto* de = app.add_subcommand("decompose", "re-fit the stored snapshots of a run directory");
  auto* di = app.add_subcommand("diagnose", "re-derive the diagnostics of a run directory");
  auto* ve = app.add_subcommand("verify", "run the acceptance suite");
  for (auto* s : {gs, ev, co, sw, de, di, ve}) add_common(s);
  ev->add_option("--n", c.n, "end at t_n (default n_max)");
  co->add_option("--n", c.n, "approximation index")->required();

  CLI11_PARSE(app, argc, argv);
  for (auto* s : {gs, ev, co, sw, de, di, ve})
    if (s->parsed() && s->count("--seed")) c.seed = seed;

  try {
    if (gs->parsed()) return cmd_groundstate(c);
    if (ev->parsed()) return cmd_evolve(c);
    if (co->parsed()) return cmd_construct(c);
    if (sw->parsed()) return cmd_sweep(c);
    if (de->parsed()) return cmd_decompose(c);
    if (di->parsed()) return cmd_diagnose(c);
    if (ve->parsed()) return cmd_verify(c);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
