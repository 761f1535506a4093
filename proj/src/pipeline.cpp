#include "bwlab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace bwlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTimeTol = 1e-12;

std::vector<ScalarFunction> noise_functions(const Scenario& s) {
  std::vector<ScalarFunction> out;
  for (int l = 0; l < s.noise.count; ++l) {
    FlatBuilderOptions fo;
    fo.singularities = s.singularities();
    fo.order = s.noise.flatness;
    fo.width = s.noise.width;
    fo.center = {(l - 0.5 * (s.noise.count - 1)), 0.0};
    fo.amplitude = s.noise.amplitude / (l + 1.0);
    out.push_back(build_flat_spatial(fo, s.dim));
  }
  return out;
}

FlatBuilderOptions residue_options(const Scenario& s) {
  FlatBuilderOptions fo;
  fo.singularities = s.singularities();
  fo.order = 2 * s.residue.m;
  fo.width = s.residue.width;
  fo.amplitude = 1.0;
  return fo;
}

// Linear extrapolation from the two previous fits (at t1 and t0) to t.
ModulationState extrapolate(const DecompositionRow& r1, const DecompositionRow& r0, double t, int d) {
  const auto a = pack(r1.params, d), b = pack(r0.params, d);
  const double s = (t - r1.t) / (r0.t - r1.t);
  std::vector<double> c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + s * (b[i] - a[i]);
  ModulationState out = unpack(c, d, t);
  for (std::size_t k = 0; k < out.bubbles.size(); ++k)
    if (!(out.bubbles[k].lambda > 0.0)) out.bubbles[k] = r0.params.bubbles[k];
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

}  // namespace

Experiment prepare_experiment(const Scenario& s) {
  Experiment ex(s, solve_rho(solve_ground_state(s.dim)), make_grid(s.dim, s.half_width, s.n));
  for (const auto& b : s.bubbles) check_resolution(b.w * (s.T - s.schedule_time(s.n_max)), *ex.grid);

  if (s.noise.count > 0) {
    const auto nodes = uniform_nodes(0.0, s.T, s.noise.node_spacing);
    auto phis = noise_functions(s);
    for (const auto& phi : phis) {
      ComplexFunction c = [phi](const Point& x) { return cplx(phi(x), 0.0); };
      ex.noise_flatness_residual = std::max(
          ex.noise_flatness_residual, verify_flatness(c, s.singularities(), s.noise.flatness, s.dim));
    }
    ex.model = std::make_shared<PerturbationModel>(ex.grid, std::move(phis),
                                                   sample_brownian(s.noise.count, nodes, s.noise.seed),
                                                   s.noise.flatness);
  } else {
    ex.model = std::make_shared<PerturbationModel>(ex.grid);
  }

  const FlatBuilderOptions fo = residue_options(s);
  if (s.residue.alpha_star > 0.0) {
    ex.z_star = build_regular_residue(fo, s.residue.m, s.residue.alpha_star, ex.grid);
    ex.residue_flatness_residual =
        verify_flatness(build_flat_profile(fo, s.dim), s.singularities(), fo.order, s.dim) *
        regular_residue_scale(ComplexField::from_function(ex.grid, build_flat_profile(fo, s.dim)),
                              s.residue.m);
  }
  ex.loc = build_localizers(s.singularities(), ex.grid);
  ex.chi = CutoffChi(s.A);

  std::vector<double> times = construction_times(s, s.n_max);
  ex.z = evolve_regular_profile(ex.z_star, *ex.model, s.T, s.t_star, s.dt, times);
  if (ex.z.termination != Termination::completed)
    throw Error("regular profile: " + to_string(ex.z.termination) + ": " + ex.z.message);
  return ex;
}

std::vector<double> construction_times(const Scenario& s, int n) {
  if (n < 0 || n > s.n_max) throw InvalidArgument("construction: n outside the schedule");
  const int j = s.samples_per_step;
  const double step = std::pow(s.schedule_ratio, 1.0 / j);
  std::vector<double> out;
  // Before t_0 (when t* precedes it) the same geometric spacing continues.
  for (int i = -1;; --i) {
    const double t = s.T - s.schedule_base * std::pow(step, i);
    if (t <= s.t_star + kTimeTol) break;
    out.push_back(t);
  }
  out.push_back(s.t_star);
  for (int i = 0; i <= j * n; ++i)
    out.push_back(i % j == 0 ? s.schedule_time(i / j) : s.T - s.schedule_base * std::pow(step, i));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= kTimeTol; }),
            out.end());
  return out;
}

std::vector<DecompositionRow> decompose_series(const Experiment& ex, const std::vector<double>& times,
                                               const std::vector<ComplexField>& fields,
                                               const std::vector<ComplexField>& zs,
                                               const ModulationState& last_guess) {
  const int d = ex.scenario.dim;
  const std::size_t n = times.size();
  std::vector<DecompositionRow> rows(n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t i = n - 1 - c;
    ModulationState guess;
    if (c == 0) {
      guess = last_guess;
    } else if (c == 1) {
      guess = rows[i + 1].params;
    } else {
      guess = extrapolate(rows[i + 2], rows[i + 1], times[i], d);
    }
    guess.t = times[i];
    rows[i] = fit_parameters(fields[i], zs[i], guess, ex.gs, ex.loc, ex.scenario.T);
    if (!rows[i].converged && c > 0) {
      // Retry from the previous fit before flagging the row.
      ModulationState g2 = rows[i + 1].params;
      g2.t = times[i];
      DecompositionRow alt = fit_parameters(fields[i], zs[i], g2, ex.gs, ex.loc, ex.scenario.T);
      if (alt.converged || alt.residual_max < rows[i].residual_max) rows[i] = std::move(alt);
    }
  }
  return rows;
}

std::vector<DiagnosticsRow> diagnose_series(const Experiment& ex, std::vector<DecompositionRow>& rows,
                                            const std::vector<ComplexField>& fields,
                                            const std::vector<ComplexField>& zs, bool& has_mod) {
  const Scenario& s = ex.scenario;
  const int d = s.dim;
  const std::size_t n = rows.size();
  has_mod = n >= 3 && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.converged; });
  std::vector<ModulationState> rates;
  if (has_mod) {
    modulation_vector(rows, d);
    rates = parameter_rates(rows);
  }
  BudgetConstants bc;
  bc.eps = s.case_epsilon();

  std::vector<DiagnosticsRow> out(n);
  std::vector<double> er(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    DiagnosticsRow& r = out[i];
    const DecompositionRow& row = rows[i];
    r.t = row.t;
    r.energy = energy(fields[i]);
    r.energy_rate = energy_variation_rhs(fields[i], *ex.model, row.t);
    const ComplexField R = remainder(fields[i], zs[i], row.params, ex.gs);
    r.I = generalized_energy(R, row.params, zs[i], fields[i], ex.loc, ex.chi);
    r.balls = mass_quantization(fields[i], s.singularities(), s.ball_radius);
    const double zn = l2_norm(zs[i]);
    r.z_mass = zn * zn;
    BudgetInputs in;
    in.T = s.T;
    in.t = row.t;
    in.D = row.D;
    in.alpha_star = s.residue.alpha_star;
    in.m = s.residue.m;
    in.flatness = s.noise.flatness;
    in.dim = d;
    in.params = row.params;
    in.local_mass = row.local_mass;
    if (has_mod) {
      r.has_eta = true;
      r.eta = eta_residual(row.params, rates[i], *ex.model, ex.gs, zs[i]);
      in.rates = rates[i];
      in.mod = row.mod;
      r.budget = error_budget(in, bc);
      er[i] = r.budget;
    }
    r.lower_budget = lower_bound_budget(in, bc);
    const double tt = s.T - row.t;
    r.lower_ok = r.I >= bc.c_lower * row.D * row.D / (tt * tt) - r.lower_budget;
  }
  if (has_mod)
    for (std::size_t i = 1; i < n; ++i) {
      const double allowed = bc.C2 * s.A * 0.5 * (er[i] + er[i - 1]) * (rows[i].t - rows[i - 1].t);
      out[i].monotone_ok = out[i].I - out[i - 1].I >= -allowed;
    }
  return out;
}

ConstructionResult construct_approximation(const Experiment& ex, int n) {
  const Scenario& s = ex.scenario;
  ConstructionResult res;
  res.n = n;
  res.t_n = s.schedule_time(n);
  for (const auto& b : s.bubbles) check_resolution(b.w * (s.T - res.t_n), *ex.grid);
  const std::vector<double> times = construction_times(s, n);

  const ComplexField z_tn = ex.z.trajectory.at(res.t_n);
  EvolutionState st{eval_pseudoconformal(s.bubbles, ex.gs, ex.grid, s.T, res.t_n) + z_tn, res.t_n, {}};
  IntegrateOptions opt;
  opt.dt = s.dt;
  opt.sample_times = times;
  auto out = integrate(std::move(st), s.t_star, *ex.model, opt, [&](const EvolutionState& e) {
    res.record.times.push_back(e.t);
    res.record.stats.push_back(e.stats);
    res.record.trajectory.add(e.t, e.field);
  });
  res.record.termination = out.termination;
  res.record.message = out.message;
  if (out.termination != Termination::completed)
    throw Error("construction n = " + std::to_string(n) + ": " + to_string(out.termination) + ": " +
                out.message);

  const StoredTrajectory& tr = res.record.trajectory;
  std::vector<double> ts = tr.times();
  std::vector<ComplexField> fields, zs;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    fields.push_back(tr.field(i));
    zs.push_back(ex.z.trajectory.at(ts[i]));
  }
  res.rows = decompose_series(ex, ts, fields, zs, boundary_parameters(s.bubbles, s.T, res.t_n));
  res.diagnostics = diagnose_series(ex, res.rows, fields, zs, res.has_mod);
  return res;
}

std::string meta_json(const Experiment& ex, int n, const std::string& kind) {
  const Scenario& s = ex.scenario;
  json j;
  j["kind"] = kind;
  j["code_version"] = BWLAB_VERSION;
  j["scenario"] = json::parse(scenario_to_json(s));
  j["scenario_hash"] = s.hash();
  j["seed"] = s.noise.seed;
  j["grid"] = {{"d", s.dim}, {"L", s.half_width}, {"N", s.n}, {"dx", ex.grid->dx()}};
  j["n"] = n;
  if (n >= 0) j["t_n"] = s.schedule_time(n);
  j["kappa"] = s.kappa();
  j["frequency_spread"] = s.frequency_spread();
  j["inverse_separation"] = s.inverse_separation();
  j["warnings"] = s.warnings();
  j["ground_state"] = {{"Q0", ex.gs.q0}, {"mass", ex.gs.mass_q}};
  j["flatness_residual"] = {{"noise", ex.noise_flatness_residual},
                            {"residue", ex.residue_flatness_residual}};
  j["localizers"] = {{"sigma", ex.loc.sigma},
                     {"direction", {ex.loc.direction[0], ex.loc.direction[1]}},
                     {"gradient_constant", ex.loc.gradient_constant}};
  j["A"] = s.A;
  return j.dump(2) + "\n";
}

void write_series_csv(const fs::path& path, const Experiment& ex,
                      const std::vector<DecompositionRow>& rows) {
  const int d = ex.scenario.dim;
  std::string out = "t";
  for (int k = 0; k < ex.scenario.K(); ++k) {
    const std::string p = "_" + std::to_string(k + 1);
    out += ",lambda" + p;
    for (int j = 0; j < d; ++j) out += ",alpha" + std::to_string(j + 1) + p;
    for (int j = 0; j < d; ++j) out += ",beta" + std::to_string(j + 1) + p;
    out += ",gamma" + p + ",theta" + p + ",Mod" + p + ",M" + p;
  }
  out += ",D,residual_max,iterations,converged\n";
  for (const auto& r : rows) {
    out += fmt(r.t);
    for (std::size_t k = 0; k < r.params.bubbles.size(); ++k) {
      const BubbleParams& b = r.params.bubbles[k];
      out += "," + fmt(b.lambda);
      for (int j = 0; j < d; ++j) out += "," + fmt(b.alpha[j]);
      for (int j = 0; j < d; ++j) out += "," + fmt(b.beta[j]);
      out += "," + fmt(b.gamma) + "," + fmt(b.theta);
      out += "," + (k < r.mod.size() ? fmt(r.mod[k]) : std::string("nan"));
      out += "," + (k < r.local_mass.size() ? fmt(r.local_mass[k]) : std::string("nan"));
    }
    out += "," + fmt(r.D) + "," + fmt(r.residual_max) + "," + std::to_string(r.iterations) + "," +
           (r.converged ? "1" : "0") + "\n";
  }
  write_text(path, out);
}

void write_diagnostics_csv(const fs::path& path, const Experiment& ex,
                           const std::vector<DecompositionRow>& rows,
                           const std::vector<DiagnosticsRow>& diag) {
  std::string out = "t,E,dEdt_formula,I,D,eta,eta1,eta2,eta3,eta4";
  for (int k = 0; k < ex.scenario.K(); ++k) out += ",ball_mass_" + std::to_string(k + 1);
  out += ",exterior_mass,z_mass,budget_Er,lower_budget,lower_ok,monotone_ok\n";
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const DiagnosticsRow& r = diag[i];
    out += fmt(r.t) + "," + fmt(r.energy) + "," + fmt(r.energy_rate) + "," + fmt(r.I) + "," +
           fmt(rows[i].D);
    if (r.has_eta) {
      out += "," + fmt(r.eta.total);
      for (double p : r.eta.parts) out += "," + fmt(p);
    } else {
      out += ",nan,nan,nan,nan,nan";
    }
    for (double b : r.balls.ball) out += "," + fmt(b);
    out += "," + fmt(r.balls.exterior) + "," + fmt(r.z_mass) + "," + fmt(r.budget) + "," +
           fmt(r.lower_budget) + "," + (r.lower_ok ? "1" : "0") + "," + (r.monotone_ok ? "1" : "0") +
           "\n";
  }
  write_text(path, out);
}

void write_construction(const fs::path& dir, const Experiment& ex, const ConstructionResult& res) {
  fs::create_directories(dir / "fields");
  write_text(dir / "meta.json", meta_json(ex, res.n, "construction"));
  const StoredTrajectory& tr = res.record.trajectory;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "t_%04zu.nlsf", i);
    write_snapshot(dir / "fields" / name, tr.field(i), tr.times()[i]);
    std::snprintf(name, sizeof name, "z_%04zu.nlsf", i);
    write_snapshot(dir / "fields" / name, ex.z.trajectory.at(tr.times()[i]), tr.times()[i]);
  }
  write_series_csv(dir / "series.csv", ex, res.rows);
  write_diagnostics_csv(dir / "diagnostics.csv", ex, res.rows, res.diagnostics);
  write_paths_csv(dir / "paths.csv", ex.model->paths());
}

StoredRun read_run(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw InvalidArgument("run directory has no meta.json: " + dir.string());
  const json meta = json::parse(in);
  StoredRun run;
  run.scenario = parse_scenario(meta.at("scenario").dump());
  run.n = meta.at("n").get<int>();
  std::vector<fs::path> vs, zs;
  for (const auto& e : fs::directory_iterator(dir / "fields")) {
    const std::string name = e.path().filename().string();
    if (name.rfind("t_", 0) == 0) vs.push_back(e.path());
    if (name.rfind("z_", 0) == 0) zs.push_back(e.path());
  }
  std::sort(vs.begin(), vs.end());
  std::sort(zs.begin(), zs.end());
  if (vs.size() != zs.size() || vs.empty()) throw InvalidArgument("run directory: snapshot mismatch");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    Snapshot a = read_snapshot(vs[i]);
    Snapshot b = read_snapshot(zs[i]);
    if (std::abs(a.t - b.t) > kTimeTol) throw InvalidArgument("run directory: v/z time mismatch");
    run.times.push_back(a.t);
    run.fields.push_back(std::move(a.field));
    run.zs.push_back(std::move(b.field));
  }
  return run;
}

namespace {

// Rebuilds the experiment without re-integrating z (the stored z snapshots are used).
Experiment experiment_for_run(const StoredRun& run) {
  const Scenario& s = run.scenario;
  Experiment ex(s, solve_rho(solve_ground_state(s.dim)), make_grid(s.dim, s.half_width, s.n));
  ex.model = s.noise.count > 0
                 ? std::make_shared<PerturbationModel>(
                       ex.grid, noise_functions(s),
                       sample_brownian(s.noise.count, uniform_nodes(0.0, s.T, s.noise.node_spacing),
                                       s.noise.seed),
                       s.noise.flatness)
                 : std::make_shared<PerturbationModel>(ex.grid);
  ex.loc = build_localizers(s.singularities(), ex.grid);
  ex.chi = CutoffChi(s.A);
  return ex;
}

std::vector<ComplexField> on_grid(std::vector<ComplexField> fs, const GridPtr& g) {
  std::vector<ComplexField> out;
  for (auto& f : fs) {
    if (!(f.grid() == *g)) throw InvalidArgument("run directory: snapshot grid differs from scenario");
    out.emplace_back(g, std::vector<cplx>(f.values().begin(), f.values().end()));
  }
  return out;
}

}  // namespace

std::vector<DecompositionRow> redecompose_run(const fs::path& dir) {
  StoredRun run = read_run(dir);
  Experiment ex = experiment_for_run(run);
  const auto fields = on_grid(run.fields, ex.grid);
  const auto zs = on_grid(run.zs, ex.grid);
  const double tn = run.times.back();
  auto rows = decompose_series(ex, run.times, fields, zs,
                               boundary_parameters(run.scenario.bubbles, run.scenario.T, tn));
  if (rows.size() >= 3 && std::all_of(rows.begin(), rows.end(), [](auto& r) { return r.converged; }))
    modulation_vector(rows, run.scenario.dim);
  write_series_csv(dir / "series.csv", ex, rows);
  return rows;
}

void rediagnose_run(const fs::path& dir) {
  StoredRun run = read_run(dir);
  Experiment ex = experiment_for_run(run);
  const auto fields = on_grid(run.fields, ex.grid);
  const auto zs = on_grid(run.zs, ex.grid);
  auto rows = decompose_series(ex, run.times, fields, zs,
                               boundary_parameters(run.scenario.bubbles, run.scenario.T, run.times.back()));
  bool has_mod = false;
  const auto diag = diagnose_series(ex, rows, fields, zs, has_mod);
  write_series_csv(dir / "series.csv", ex, rows);
  write_diagnostics_csv(dir / "diagnostics.csv", ex, rows, diag);
}

SweepResult sweep(const Experiment& ex, int threads) {
  const Scenario& s = ex.scenario;
  const int count = s.n_max + 1;
  SweepResult res;
  res.runs.resize(count);
  std::vector<std::string> errors(count);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int n = next++; n < count; n = next++) {
      try {
        res.runs[n] = construct_approximation(ex, n);
      } catch (const std::exception& e) {
        errors[n] = e.what();
      }
    }
  };
  const int nt = std::max(1, std::min(threads, count));
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (int n = 0; n < count; ++n)
    if (!errors[n].empty()) throw Error("sweep: " + errors[n]);

  for (int n = 0; n < count; ++n) res.D_at_t_star.push_back(res.runs[n].rows.front().D);
  for (int n = 0; n + 1 < count; ++n) {
    const auto& a = res.runs[n].record;
    const auto& b = res.runs[n + 1].record;
    auto cmp = compare_trajectories(a.trajectory, b.trajectory, a.trajectory.times());
    double sup = 0.0;
    for (const auto& c : cmp) sup = std::max(sup, c.l2);
    res.sup_difference.push_back(sup);
    res.difference_at_t_star.push_back(cmp.front().l2);
    res.comparisons.push_back(std::move(cmp));
  }
  if (count >= 5) {
    const auto& last = res.runs.back();
    std::vector<double> t, y;
    for (int k = 0; k < s.n_max; ++k) {
      const double tk = s.schedule_time(k);
      for (const auto& r : last.rows)
        if (std::abs(r.t - tk) <= kTimeTol) {
          t.push_back(r.t);
          y.push_back(r.D);
        }
    }
    res.D_rate = rate_fit(t, y, s.T);
  }
  return res;
}

void write_sweep(const fs::path& dir, const Experiment& ex, const SweepResult& res) {
  fs::create_directories(dir);
  for (const auto& r : res.runs) write_construction(dir / ("n_" + std::to_string(r.n)), ex, r);
  std::string cmp = "n,t,l2,h1\n";
  for (std::size_t n = 0; n < res.comparisons.size(); ++n)
    for (const auto& c : res.comparisons[n])
      cmp += std::to_string(n) + "," + fmt(c.t) + "," + fmt(c.l2) + "," + fmt(c.h1) + "\n";
  write_text(dir / "comparisons.csv", cmp);
  json j = json::parse(meta_json(ex, -1, "sweep"));
  j["D_at_t_star"] = res.D_at_t_star;
  j["sup_difference"] = res.sup_difference;
  j["difference_at_t_star"] = res.difference_at_t_star;
  j["D_rate"] = {{"slope", res.D_rate.slope}, {"intercept", res.D_rate.intercept}, {"r2", res.D_rate.r2}};
  write_text(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace bwlab
