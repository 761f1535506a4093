#pragma once

// Geometric decomposition v = U(P) + z + R with R orthogonal to the
// generalized null directions of every bubble.

#include <cstdint>
#include <vector>

#include "bwlab/fields.hpp"
#include "bwlab/groundstate.hpp"
#include "bwlab/profiles.hpp"

namespace bwlab {

struct LocalizerSet {
  std::vector<ComplexField> phi;   // real-valued, in the caller's bubble order
  std::vector<int> order;          // bubble indices sorted along the direction
  double sigma = 0.0;
  Point direction{1.0, 0.0};
  double gradient_constant = 0.0;  // max_k sup |grad Phi_k| * sigma
};

/// Smooth C^2 ramp: 1 for s <= 4 sigma, 0 for s >= 8 sigma.
double localizer_ramp(double s, double sigma);

LocalizerSet build_localizers(const std::vector<Point>& singularities, const GridPtr& grid,
                              std::uint64_t seed = 0);

struct FitOptions {
  double tolerance = 1e-9;  // scaled residual
  int max_iterations = 25;
  double relative_step = 1e-6;
};

struct DecompositionRow {
  double t = 0.0;
  ModulationState params;
  double D = 0.0;
  std::vector<double> mod;           // Mod_k (filled by modulation_vector)
  std::vector<double> local_mass;    // M_k
  std::vector<double> residuals;     // scaled orthogonality residuals, (2d+3) per bubble
  double residual_max = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// R = v - U(P) - z.
ComplexField remainder(const ComplexField& v, const ComplexField& z, const ModulationState& p,
                       const GroundStateTable& gs);

/// Orthogonality conditions of R against bubble k, in pack order:
/// Re<(x-a)_j U, R>, Re<|x-a|^2 U, R>, Im<d_j U, R>, Im<Lambda U, R>, Im<rho_k, R>,
/// each divided by ||weight|| ||Q||. Ordered as (x-a)_j, |x-a|^2, d_j, Lambda, rho.
std::vector<double> orthogonality_residuals(const ComplexField& R, const ModulatedProfile& prof,
                                            const GroundStateTable& gs);

/// D = ||R|| + (T - t) ||grad R||.
double remainder_size(const ComplexField& R, double T, double t);

/// M_k = 2 Re<R Phi_k, U_k> + int |R|^2 Phi_k.
std::vector<double> localized_mass(const ComplexField& R, const ModulatedProfile& prof,
                                   const LocalizerSet& loc);

/// Newton solve of the 2d+3 conditions per bubble from `guess` (time taken from guess.t).
DecompositionRow fit_parameters(const ComplexField& v, const ComplexField& z,
                                const ModulationState& guess, const GroundStateTable& gs,
                                const LocalizerSet& loc, double T, const FitOptions& opt = {});

/// Time derivatives of the parameters along a row series (three-point differences,
/// one-sided at the ends). theta is unwrapped first.
std::vector<ModulationState> parameter_rates(const std::vector<DecompositionRow>& rows);

/// Mod_k for given parameters and their rates.
std::vector<double> modulation_from_rates(const ModulationState& p, const ModulationState& rate,
                                          int dim);

/// Fills rows[i].mod. Requires >= 3 rows, all converged.
void modulation_vector(std::vector<DecompositionRow>& rows, int dim);

/// eps_k(y) = lambda^{d/2} e^{-i theta} R_k(alpha + lambda y) on a y-grid with
/// half-width L / lambda and the same N.
ComplexField renormalize(const ComplexField& Rk, const BubbleParams& p);

/// Scal of a renormalized remainder (its own grid).
double scal_renormalized(const ComplexField& eps, const GroundStateTable& gs);

}  // namespace bwlab
