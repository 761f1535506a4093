#pragma once

// Lower-order coefficients a1 = 2i sum grad(phi_l) h_l and
// a0 = -sum_j (sum_l d_j phi_l h_l)^2 + i sum lap(phi_l) h_l.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "bwlab/fields.hpp"

namespace bwlab {

using ScalarFunction = std::function<double(const Point&)>;
using ComplexFunction = std::function<cplx(const Point&)>;

/// Piecewise-linear real path on strictly increasing nodes.
class PiecewiseLinearPath {
 public:
  PiecewiseLinearPath() = default;
  PiecewiseLinearPath(std::vector<double> t, std::vector<double> h);
  static PiecewiseLinearPath constant(double t0, double t1, double value);

  double operator()(double t) const;
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  const std::vector<double>& nodes() const { return t_; }
  const std::vector<double>& values() const { return h_; }

 private:
  std::vector<double> t_, h_;
};

/// Independent Brownian paths on `nodes`, h(nodes[0]) = 0, from an mt19937_64
/// seeded with `seed` (path l consumes its increments before path l+1).
std::vector<PiecewiseLinearPath> sample_brownian(int count, const std::vector<double>& nodes,
                                                 std::uint64_t seed);
/// Uniform nodes t0, t0 + spacing, ..., t1 (t1 included).
std::vector<double> uniform_nodes(double t0, double t1, double spacing);

void write_paths_csv(const std::filesystem::path& path,
                     const std::vector<PiecewiseLinearPath>& paths);

struct FlatBuilderOptions {
  std::vector<Point> singularities;
  int order = 5;              // derivatives of order <= order vanish at each singularity
  double width = 1.6;         // Gaussian envelope exp(-|x - center|^2 / width^2)
  Point center{0.0, 0.0};
  double amplitude = 1.0;
};

/// amplitude * exp(-|x-c|^2/width^2) * prod_k m(|x - x_k|^2), m(s) = s^p / (1 + s^p),
/// p = ceil((order + 1) / 2).
ScalarFunction build_flat_spatial(const FlatBuilderOptions& opt, int dim);

/// The unit-amplitude complex profile used for z*: flatness order `order`
/// (= 2m), phase (1+i)/sqrt(2).
ComplexFunction build_flat_profile(const FlatBuilderOptions& opt, int dim);

/// z* sampled and scaled so that max(||z*||_{H^{2m+2+d}}, ||<x> z*||_{H^1}) = alpha_star.
ComplexField build_regular_residue(const FlatBuilderOptions& opt, int m, double alpha_star,
                                   const GridPtr& grid);
/// Scale factor applied by build_regular_residue (analytic profile times factor).
double regular_residue_scale(const ComplexField& unit, int m);

/// Finite-difference weights (Fornberg) for derivatives 0..max_order at
/// offsets `nodes` about 0. Returns w[order][node].
std::vector<std::vector<double>> fornberg_weights(const std::vector<double>& nodes, int max_order);

/// Max |d^v f(x_k)| over all multi-indices |v| <= order and all points,
/// by central differences with spacing h. `f` is evaluated off-grid.
double verify_flatness(const ComplexFunction& f, const std::vector<Point>& points, int order,
                       int dim, double h = 0.05);
inline constexpr double kFlatnessTolerance = 1e-5;

struct CoefficientSlice {
  std::vector<ComplexField> a1;
  ComplexField a0;
  double t = 0.0;
};

class PerturbationModel {
 public:
  /// Free NLS (no noise terms).
  explicit PerturbationModel(GridPtr grid);
  PerturbationModel(GridPtr grid, std::vector<ScalarFunction> phi,
                    std::vector<PiecewiseLinearPath> paths, int flatness_order);

  const GridPtr& grid() const { return grid_; }
  int size() const { return static_cast<int>(phi_.size()); }
  bool is_free() const { return phi_.empty(); }
  int flatness_order() const { return flatness_order_; }
  const ScalarFunction& phi_function(int l) const { return phi_.at(l); }
  const PiecewiseLinearPath& path(int l) const { return paths_.at(l); }
  const std::vector<PiecewiseLinearPath>& paths() const { return paths_; }

  /// Sampled phi_l and cached spectral derivatives.
  const std::vector<double>& phi(int l) const { return cache_.at(l).phi; }
  const std::vector<double>& grad(int l, int j) const { return cache_.at(l).grad.at(j); }
  const std::vector<double>& hessian(int l, int j, int k) const;
  const std::vector<double>& laplacian(int l) const { return cache_.at(l).lap; }
  const std::vector<double>& bilaplacian(int l) const { return cache_.at(l).bilap; }

  /// h_l(t) for all l (throws outside the path domain).
  std::vector<double> path_values(double t) const;

  CoefficientSlice coefficients(double t) const;

  /// max over points within one unit of the boundary of <x>^2 |d^v phi_l|, 1 <= |v| <= 3.
  double boundary_proxy() const;

 private:
  struct Cache {
    std::vector<double> phi;
    std::vector<std::vector<double>> grad;
    std::vector<std::vector<double>> hess;  // j*d + k
    std::vector<double> lap, bilap;
  };
  GridPtr grid_;
  std::vector<ScalarFunction> phi_;
  std::vector<PiecewiseLinearPath> paths_;
  int flatness_order_ = 0;
  std::vector<Cache> cache_;
};

enum class Direction { forward, inverse };

/// forward: X = exp(i sum_l phi_l h_l(t)) v; inverse: the conjugate phase.
ComplexField doss_sussman(const ComplexField& v, const PerturbationModel& model, double t,
                          Direction direction);

}  // namespace bwlab
