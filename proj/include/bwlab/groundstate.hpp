#pragma once

// Ground state Q of  Delta Q - Q + Q^{1+4/d} = 0, the radial profile rho of
// L+ rho = -|x|^2 Q, and the linearized operators L+ / L- around Q.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bwlab/fields.hpp"

namespace bwlab {

struct RadialSample {
  double value = 0.0;
  double derivative = 0.0;
};

/// Radial tables for Q and rho on r_i = i * h, i = 0..M, h = r_max / M.
class GroundStateTable {
 public:
  int dim = 1;
  double r_max = 0.0;
  int samples = 0;  // M
  double h = 0.0;

  std::vector<double> q, dq, d2q;
  std::vector<double> rho, drho, d2rho;
  bool has_rho = false;

  double q0 = 0.0;      // Q(0)
  double mass_q = 0.0;  // ||Q||^2
  double yq2 = 0.0;     // ||yQ||^2

  /// Q and Q' at radius r (quintic Hermite of log Q inside the table,
  /// exponential tail beyond r_max).
  RadialSample ground(double r) const;
  /// rho and rho' at radius r (zero beyond r_max).
  RadialSample profile_rho(double r) const;

  /// Q^{4/d} at radius r.
  double potential(double r) const;

  /// Max-norm residual of the radial ground-state equation on the table grid.
  double equation_residual() const;
  /// Max-norm residual of L+ rho = -r^2 Q on the table grid.
  double rho_residual() const;

  /// Rebuilds the interpolation caches after q/dq/d2q (and rho) change.
  void prepare();

 private:
  std::vector<double> lq_, dlq_, d2lq_;
};

/// Ground state on [0, r_max] with M intervals. d = 1 samples the closed form
/// 3^{1/4} sech^{1/2}(2r); d = 2 shoots on Q(0) with bisection and refines the
/// shot by Newton on a sixth-order discretization.
GroundStateTable solve_ground_state(int dim, double r_max = 30.0, int samples = 6000);

/// The shooting + Newton route for either dimension (d = 1 is used as a test
/// of this code path against the closed form).
GroundStateTable shoot_ground_state(int dim, double r_max, int samples);

/// Bisection on Q(0): returns the bracket endpoint after convergence.
double shoot_initial_value(int dim, double h, double r_stop, double lo, double hi);

/// Fills rho by a sixth-order finite-difference solve of L+ rho = -r^2 Q.
GroundStateTable solve_rho(GroundStateTable gs);

/// Radial Laplacian f'' + (d-1)/r f' by sixth-order differences (even extension
/// at r = 0, zero beyond r_max).
std::vector<double> radial_laplacian(const std::vector<double>& f, int dim, double h);

enum class Linearized { plus, minus };

/// L+ f = -Delta f + f - (1+4/d) Q^{4/d} f and L- f = -Delta f + f - Q^{4/d} f,
/// with the spectral Laplacian and Q from the radial interpolant.
ComplexField apply_linearized(Linearized which, const GroundStateTable& gs, const ComplexField& f);
/// Radial counterpart on the table grid.
std::vector<double> apply_linearized_radial(Linearized which, const GroundStateTable& gs,
                                            const std::vector<double>& f);

/// Cartesian samples of the generalized null-space directions.
struct NullSpaceFields {
  ComplexField q;
  std::vector<ComplexField> xq;     // x_j Q
  ComplexField r2q;                 // |x|^2 Q
  std::vector<ComplexField> grad_q; // d_j Q
  ComplexField lambda_q;            // d/2 Q + x . grad Q
  ComplexField rho;
};

NullSpaceFields null_space_fields(const GroundStateTable& gs, const GridPtr& grid);

struct KernelReport {
  double lplus_grad_q = 0.0;    // L+ grad Q = 0
  double lplus_lambda_q = 0.0;  // L+ Lambda Q = -2 Q
  double lplus_rho = 0.0;       // L+ rho = -|x|^2 Q
  double lminus_q = 0.0;        // L- Q = 0
  double lminus_xq = 0.0;       // L- x Q = -2 grad Q
  double lminus_r2q = 0.0;      // L- |x|^2 Q = -4 Lambda Q
  double max() const;
  bool pass(double tol = 1e-6) const { return max() < tol; }
};

KernelReport check_kernel_identities(const GroundStateTable& gs, const GridPtr& grid);

/// Plateau cutoff: 1 on |x| <= A, exp(-|x|/A) beyond 2A, C^2 blend of the
/// logarithm in between.
double localized_cutoff(double r, double scale);

/// Scal(f): squared projections of Re f on {Q, x Q, |x|^2 Q} and of Im f on
/// {grad Q, Lambda Q, rho}.
double scal(const ComplexField& f, const NullSpaceFields& ns);

/// Removes from f its components along the six families above (least squares
/// in each of the real and imaginary parts) so that Scal(f) = 0.
ComplexField orthogonalize_null_space(const ComplexField& f, const NullSpaceFields& ns);

struct CoercivityTerms {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio() const { return numerator / denominator; }
};

/// Localized quadratic form of (L+, L-) against the weighted H1 norm.
CoercivityTerms coercivity_terms(const GroundStateTable& gs, const ComplexField& f, double scale);

/// Random smooth localized f drawn from `seed`, orthogonalized, then the
/// localized coercivity ratio.
double coercivity_sample(const GroundStateTable& gs, const GridPtr& grid, double scale,
                         std::uint64_t seed);

/// A random smooth localized test function (before orthogonalization).
ComplexField random_test_function(const GridPtr& grid, std::uint64_t seed);

struct EigenEstimate {
  double eigenvalue = 0.0;
  ComplexField vector;
  int iterations = 0;
};

/// Lowest eigenvalue of L+ on real fields by shifted inverse iteration
/// (preconditioned conjugate gradients for the inner solves).
EigenEstimate lowest_eigenvalue_plus(const GroundStateTable& gs, const GridPtr& grid,
                                     int max_iterations = 200);

/// Persists Q (and rho when present) sampled on `grid` as binary snapshots,
/// the radial table as CSV, and a JSON sidecar with the constants.
void write_ground_state(const std::filesystem::path& dir, const GroundStateTable& gs,
                        const GridPtr& grid);

}  // namespace bwlab
