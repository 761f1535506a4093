#pragma once

// Explicit profiles: pseudo-conformal blow-up bubbles S, solitons W,
// modulated ground states U_k, and the pseudo-conformal transform pair.

#include <memory>
#include <vector>

#include "bwlab/fields.hpp"
#include "bwlab/groundstate.hpp"

namespace bwlab {

struct BubbleSpec {
  double w = 1.0;        // frequency
  Point x{0.0, 0.0};     // blow-up point
  double phase = 0.0;    // vartheta
  Point c{0.0, 0.0};     // soliton velocity
};

/// Validates w > 0 and pairwise distinct blow-up points.
void validate_bubbles(const std::vector<BubbleSpec>& specs, int dim);

struct BubbleParams {
  double lambda = 1.0;
  Point alpha{0.0, 0.0};
  Point beta{0.0, 0.0};
  double gamma = 0.0;
  double theta = 0.0;
};

struct ModulationState {
  double t = 0.0;
  std::vector<BubbleParams> bubbles;

  void validate() const;
};

/// Number of scalar unknowns per bubble: lambda, alpha (d), beta (d), gamma, theta.
inline int params_per_bubble(int dim) { return 2 * dim + 3; }

std::vector<double> pack(const ModulationState& s, int dim);
ModulationState unpack(const std::vector<double>& v, int dim, double t);

/// Parameters whose modulated profile is exactly S(t_star).
ModulationState boundary_parameters(const std::vector<BubbleSpec>& specs, double T, double t_star);

/// Throws ResolutionError when lambda < 8 dx.
void check_resolution(double lambda, const Grid& grid);

ComplexField eval_pseudoconformal_bubble(const BubbleSpec& spec, const GroundStateTable& gs,
                                         const GridPtr& grid, double T, double t);
ComplexField eval_pseudoconformal(const std::vector<BubbleSpec>& specs, const GroundStateTable& gs,
                                  const GridPtr& grid, double T, double t);

/// Throws when a soliton center leaves the box minus a 3-unit margin.
ComplexField eval_soliton(const std::vector<BubbleSpec>& specs, const GroundStateTable& gs,
                          const GridPtr& grid, double t);

struct ModulatedBubble {
  ComplexField u;
  std::vector<ComplexField> grad_u;  // grad U_k
  ComplexField lambda_u;             // (d/2 + (x - alpha) . grad) U_k
  ComplexField rho;                  // rho_k
  std::vector<ComplexField> xu;      // (x - alpha)_j U_k
  ComplexField r2u;                  // |x - alpha|^2 U_k
};

struct ModulatedProfile {
  std::vector<ModulatedBubble> bubbles;
  ComplexField sum;
};

/// U_k = lambda^{-d/2} Q(y) e^{i(beta.y - gamma|y|^2/4)} e^{i theta}, y = (x - alpha)/lambda.
/// Derivative fields are evaluated from the closed form of Q'.
ModulatedProfile eval_modulated(const ModulationState& state, const GroundStateTable& gs,
                                const GridPtr& grid, bool with_derivatives = true);
/// Only the sum U (cheap path for the Newton residual).
ComplexField eval_modulated_sum(const ModulationState& state, const GroundStateTable& gs,
                                const GridPtr& grid);
/// Lambda_k f = d/2 f + (x - alpha) . grad f with the spectral gradient.
ComplexField spectral_scaling_generator(const ComplexField& f, const Point& alpha);

/// dU_k / d(param) for (lambda, alpha_j, beta_j, gamma, theta), in pack order.
std::vector<ComplexField> parameter_derivatives(const BubbleParams& p, const ModulatedBubble& b,
                                                const GridPtr& grid);

/// u(s, scale * x) on the points of a target grid.
class TrajectorySampler {
 public:
  virtual ~TrajectorySampler() = default;
  virtual ComplexField sample(double s, double scale, const GridPtr& target) const = 0;
};

class SolitonSampler : public TrajectorySampler {
 public:
  SolitonSampler(std::vector<BubbleSpec> specs, const GroundStateTable& gs);
  ComplexField sample(double s, double scale, const GridPtr& target) const override;

 private:
  std::vector<BubbleSpec> specs_;
  const GroundStateTable& gs_;
};

class PseudoconformalSampler : public TrajectorySampler {
 public:
  PseudoconformalSampler(std::vector<BubbleSpec> specs, const GroundStateTable& gs, double T);
  ComplexField sample(double s, double scale, const GridPtr& target) const override;

 private:
  std::vector<BubbleSpec> specs_;
  const GroundStateTable& gs_;
  double T_;
};

/// Snapshots kept sorted by time; linear in time between snapshots, Fourier
/// interpolation in space. Exact snapshot times are returned without blending.
class StoredTrajectory : public TrajectorySampler {
 public:
  void add(double t, ComplexField f);
  ComplexField sample(double s, double scale, const GridPtr& target) const override;
  double t_min() const;
  double t_max() const;
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const ComplexField& field(std::size_t i) const { return fields_.at(i); }
  /// Field at time s on its own grid (time interpolation only).
  ComplexField at(double s) const;

 private:
  std::vector<double> times_;
  std::vector<ComplexField> fields_;
};

/// C_T(u)(t, x) = (T-t)^{-d/2} u(1/(T-t), x/(T-t)) e^{-i|x|^2/(4(T-t))}.
ComplexField pseudoconformal_transform(const TrajectorySampler& u, double T, double t,
                                       const GridPtr& target);
/// C_T^{-1} z(t, x) = t^{-d/2} z(T - 1/t, x/t) e^{i|x|^2/(4t)}.
ComplexField inverse_pseudoconformal_transform(const TrajectorySampler& z, double T, double t,
                                               const GridPtr& target);

}  // namespace bwlab
