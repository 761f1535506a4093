#pragma once

// Experiment description read from JSON.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bwlab/profiles.hpp"

namespace bwlab {

struct NoiseSpec {
  int count = 1;
  int flatness = 5;        // upsilon*
  double amplitude = 0.25;
  double width = 1.6;
  double node_spacing = 1e-3;
  std::uint64_t seed = 20240607;
};

struct ResidueSpec {
  int m = 4;
  double alpha_star = 1e-3;
  double width = 2.0;
};

struct Scenario {
  std::string name = "scenario";
  int dim = 1;
  std::vector<BubbleSpec> bubbles;
  double T = 1.0;
  double t_star = 0.5;
  double half_width = 16.0;
  int n = 4096;
  double dt = 5e-5;
  // t_n = T - base * ratio^n, n = 0..n_max.
  double schedule_base = 0.5;
  double schedule_ratio = 0.75;
  int n_max = 6;
  // Samples per schedule step, log-uniform in T - t: T - base * ratio^{i/j}.
  int samples_per_step = 29;
  NoiseSpec noise;
  ResidueSpec residue;
  double A = 20.0;
  double ball_radius = 1.0;
  std::string output = "out";

  int K() const { return static_cast<int>(bubbles.size()); }
  std::vector<Point> singularities() const;
  double schedule_time(int n) const;
  std::vector<double> schedule() const;
  /// kappa = min(m + d/2 - 1, upsilon* - 2).
  double kappa() const;
  /// Case (I): max_k |w_k - w| with w the midrange of the frequencies.
  double frequency_spread() const;
  /// Case (II): 1 / min_{j != k} |x_j - x_k| (0 for K = 1).
  double inverse_separation() const;
  /// The smaller of the two; the eps entering the remainder budget.
  double case_epsilon() const { return std::min(frequency_spread(), inverse_separation()); }
  /// Violated preconditions of the construction, as readable lines.
  std::vector<std::string> warnings() const;
  /// Hex digest of the canonical JSON form.
  std::string hash() const;
};

/// Reads a scenario; every schema violation is listed (with its JSON path) in
/// the thrown InvalidArgument.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& s);

/// The shipped two-bubble d = 1 configuration.
Scenario default_scenario();

}  // namespace bwlab
