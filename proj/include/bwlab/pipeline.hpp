#pragma once

// Approximating-sequence construction and the artifacts it writes.

#include <filesystem>
#include <memory>
#include <vector>

#include "bwlab/decomposition.hpp"
#include "bwlab/diagnostics.hpp"
#include "bwlab/evolution.hpp"
#include "bwlab/groundstate.hpp"
#include "bwlab/perturbation.hpp"
#include "bwlab/scenario.hpp"

namespace bwlab {

/// Everything derived deterministically from a scenario.
struct Experiment {
  Experiment(Scenario s, GroundStateTable table, GridPtr g)
      : scenario(std::move(s)), gs(std::move(table)), grid(g), z_star(g) {}

  Scenario scenario;
  GroundStateTable gs;
  GridPtr grid;
  std::shared_ptr<PerturbationModel> model;
  ComplexField z_star;
  LocalizerSet loc;
  CutoffChi chi;
  double noise_flatness_residual = 0.0;    // verify_flatness of phi_l at x_k
  double residue_flatness_residual = 0.0;  // verify_flatness of z* at x_k
  TrajectoryRecord z;                      // regular profile, T down to t*
};

/// Builds ground state, grid, noise model, z* and its backward trajectory.
Experiment prepare_experiment(const Scenario& s);

/// Sample times of trajectory n, increasing: T - base * ratio^{i/j} for
/// i = 0..j n (so every t_k is hit exactly), plus t*. Run n samples a subset of
/// the times of run n_max.
std::vector<double> construction_times(const Scenario& s, int n);

struct DiagnosticsRow {
  double t = 0.0;
  double energy = 0.0;
  double energy_rate = 0.0;  // dE/dt formula
  double I = 0.0;
  bool has_eta = false;
  EtaReport eta;
  MassQuantization balls;
  double z_mass = 0.0;
  double budget = 0.0;        // E_r
  double lower_budget = 0.0;  // C_M (sum M_k^2/(T-t)^2 + e^{-delta/(T-t)})
  bool lower_ok = true;       // I >= c D^2/(T-t)^2 - lower_budget
  bool monotone_ok = true;    // increment from the previous row within C2 A int E_r
};

struct ConstructionResult {
  int n = 0;
  double t_n = 0.0;
  TrajectoryRecord record;                 // v_n at the sample times
  std::vector<DecompositionRow> rows;      // increasing time
  std::vector<DiagnosticsRow> diagnostics; // aligned with rows
  bool has_mod = false;
};

/// v_n(t_n) = S(t_n) + z(t_n), integrated backward to t*, then decomposed and
/// diagnosed at every sample time.
ConstructionResult construct_approximation(const Experiment& ex, int n);

/// Fits every (v, z) snapshot pair, chaining guesses backward from the
/// latest time. `fields`/`zs`/`times` are increasing in time.
std::vector<DecompositionRow> decompose_series(const Experiment& ex, const std::vector<double>& times,
                                               const std::vector<ComplexField>& fields,
                                               const std::vector<ComplexField>& zs,
                                               const ModulationState& last_guess);

std::vector<DiagnosticsRow> diagnose_series(const Experiment& ex, std::vector<DecompositionRow>& rows,
                                            const std::vector<ComplexField>& fields,
                                            const std::vector<ComplexField>& zs, bool& has_mod);

/// Run directory: meta.json, fields/t_<i>.nlsf and fields/z_<i>.nlsf,
/// series.csv, diagnostics.csv, paths.csv.
void write_construction(const std::filesystem::path& dir, const Experiment& ex,
                        const ConstructionResult& res);
void write_series_csv(const std::filesystem::path& path, const Experiment& ex,
                      const std::vector<DecompositionRow>& rows);
void write_diagnostics_csv(const std::filesystem::path& path, const Experiment& ex,
                           const std::vector<DecompositionRow>& rows,
                           const std::vector<DiagnosticsRow>& diag);

struct StoredRun {
  Scenario scenario;
  int n = 0;
  std::vector<double> times;
  std::vector<ComplexField> fields;
  std::vector<ComplexField> zs;
};

StoredRun read_run(const std::filesystem::path& dir);

/// Re-fits the stored snapshots of a run directory and rewrites series.csv.
std::vector<DecompositionRow> redecompose_run(const std::filesystem::path& dir);
/// Re-fits and re-diagnoses a run directory; rewrites series.csv and diagnostics.csv.
void rediagnose_run(const std::filesystem::path& dir);

struct SweepResult {
  std::vector<ConstructionResult> runs;  // index n
  // Consecutive comparisons: sup over common times of ||v_n - v_{n+1}|| and the value at t*.
  std::vector<std::vector<ComparisonRow>> comparisons;
  std::vector<double> sup_difference;
  std::vector<double> difference_at_t_star;
  std::vector<double> D_at_t_star;  // D_n(t*)
  RateFit D_rate;                   // D of the last run at the schedule times t_0..t_{n_max-1}
};

SweepResult sweep(const Experiment& ex, int threads = 1);
void write_sweep(const std::filesystem::path& dir, const Experiment& ex, const SweepResult& res);

/// JSON sidecar common to every artifact directory.
std::string meta_json(const Experiment& ex, int n, const std::string& kind);

}  // namespace bwlab
