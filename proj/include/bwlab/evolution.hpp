#pragma once

// Lawson (integrating-factor) RK4 for
//   i v_t + Delta v + a1 . grad v + a0 v + |v|^{4/d} v = 0,
// forward or backward in time.

#include <functional>
#include <string>
#include <vector>

#include "bwlab/fields.hpp"
#include "bwlab/perturbation.hpp"
#include "bwlab/profiles.hpp"

namespace bwlab {

struct EvolutionStats {
  double mass = 0.0;
  double h1 = 0.0;
  double max_abs = 0.0;
  long steps = 0;
};

struct EvolutionState {
  ComplexField field;
  double t = 0.0;
  EvolutionStats stats;
};

EvolutionStats measure(const ComplexField& v, long steps);

struct StepOptions {
  bool nonlinear = true;    // false drops |v|^{4/d} v (free linear flow when a = 0)
  double guard = 1.5;       // abort when ||grad v|| dx exceeds this
  // Moves the mass-weighted mean of |v|^{4/d} from the RK4 stage into the
  // exact propagator; the splitting stays exact, only the error constant changes.
  bool frequency_shift = true;
};

/// int |v|^{2+4/d} / int |v|^2.
double nonlinear_frequency(const ComplexField& v);

/// Nonlinear time-scale cap 0.1 / max(1, max|v|^{4/d}).
double step_cap(const ComplexField& v);

/// One Lawson RK4 step of signed size dt. Throws BlowupError on non-finite
/// output and ResolutionError when the guard trips.
EvolutionState step(const EvolutionState& s, const PerturbationModel& model, double dt,
                    const StepOptions& opt = {});

struct IntegrateOptions {
  double dt = 2e-4;                  // largest |step|
  StepOptions step;
  std::vector<double> sample_times;  // hit exactly; the callback fires at each
  bool respect_path_nodes = true;    // also stop at the kinks of the noise paths
};

enum class Termination { completed, blowup, underresolved };
std::string to_string(Termination t);

struct IntegrateResult {
  EvolutionState state;
  Termination termination = Termination::completed;
  std::string message;
};

using SampleCallback = std::function<void(const EvolutionState&)>;

/// Integrates from s.t to t_end (either direction). Sample times outside the
/// window are ignored; a sample at s.t fires before the first step.
IntegrateResult integrate(EvolutionState s, double t_end, const PerturbationModel& model,
                          const IntegrateOptions& opt, const SampleCallback& on_sample = {});

struct TrajectoryRecord {
  StoredTrajectory trajectory;
  std::vector<double> times;               // in integration order
  std::vector<EvolutionStats> stats;       // one per sample
  Termination termination = Termination::completed;
  std::string message;
};

/// z(T) = z*, integrated backward to t_target, with snapshots at `sample_times`
/// (T is always stored).
TrajectoryRecord evolve_regular_profile(const ComplexField& z_star, const PerturbationModel& model,
                                        double T, double t_target, double dt,
                                        const std::vector<double>& sample_times);

struct ComparisonRow {
  double t = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
};

/// ||v_a - v_b|| at the common sample times (matched to 1e-12).
std::vector<ComparisonRow> compare_trajectories(const StoredTrajectory& a, const StoredTrajectory& b,
                                                const std::vector<double>& times);

}  // namespace bwlab
