#pragma once

// Periodic-box discretization: grids, complex fields, Fourier-collocation
// derivatives, quadrature inner products and norms, snapshot I/O.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "bwlab/common.hpp"

namespace bwlab {

/// Uniform periodic grid on [-L, L)^d with N samples per axis.
class Grid {
 public:
  Grid(int dim, double half_width, int n);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int n() const { return n_; }
  double dx() const { return dx_; }
  std::size_t size() const { return size_; }
  double cell_volume() const { return dim_ == 1 ? dx_ : dx_ * dx_; }
  double volume() const { return cell_volume() * static_cast<double>(size_); }

  double coord(int i) const { return -half_width_ + i * dx_; }
  /// Physical point of a flat index. Flat index = i0 * N + i1 for d == 2.
  Point point(std::size_t flat) const;
  /// Wavenumbers pi*j/L in FFT ordering (0, 1, ..., N/2-1, -N/2, ..., -1).
  std::span<const double> wavenumbers() const { return wavenumbers_; }
  /// Wavenumber vector of a flat Fourier index.
  Point wavevector(std::size_t flat) const;

  bool operator==(const Grid& other) const {
    return dim_ == other.dim_ && n_ == other.n_ && half_width_ == other.half_width_;
  }

 private:
  int dim_;
  double half_width_;
  int n_;
  double dx_;
  std::size_t size_;
  std::vector<double> wavenumbers_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Validates d in {1,2}, L > 0 and N a power of two >= 64.
GridPtr make_grid(int dim, double half_width, int n);

/// Complex samples on a grid.
class ComplexField {
 public:
  explicit ComplexField(GridPtr grid);
  ComplexField(GridPtr grid, std::vector<cplx> values);

  template <class F>
  static ComplexField from_function(GridPtr grid, F&& f) {
    ComplexField out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) out.values_[i] = f(grid->point(i));
    return out;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const cplx> values() const { return values_; }
  std::span<cplx> values() { return values_; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }
  cplx& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const;
  double max_abs() const;

  ComplexField& operator+=(const ComplexField& o);
  ComplexField& operator-=(const ComplexField& o);
  ComplexField& operator*=(cplx s);
  /// Pointwise product.
  ComplexField& multiply(const ComplexField& o);

 private:
  GridPtr grid_;
  std::vector<cplx> values_;
};

ComplexField operator+(ComplexField a, const ComplexField& b);
ComplexField operator-(ComplexField a, const ComplexField& b);
ComplexField operator*(cplx s, ComplexField a);

void require_same_grid(const ComplexField& a, const ComplexField& b);

// Fourier transforms (unnormalized forward, 1/N^d-normalized inverse).
std::vector<cplx> fft_forward(const Grid& grid, std::span<const cplx> in);
std::vector<cplx> fft_inverse(const Grid& grid, std::span<const cplx> in);

/// Multiplies the Fourier coefficients by symbol(k) and transforms back.
ComplexField apply_fourier_multiplier(const ComplexField& f,
                                      const std::function<cplx(const Point&)>& symbol);

/// Fourier-collocation gradient; the Nyquist mode is dropped for odd orders.
std::vector<ComplexField> spectral_gradient(const ComplexField& f);
ComplexField spectral_laplacian(const ComplexField& f);
/// d/dx_axis applied `order` times.
ComplexField spectral_derivative(const ComplexField& f, int axis, int order);

/// <f, g> = sum f conj(g) dx^d.
cplx inner_product(const ComplexField& f, const ComplexField& g);
/// Real-part pairing Re<f, g> = int Re(f conj g).
inline double real_inner(const ComplexField& f, const ComplexField& g) {
  return inner_product(f, g).real();
}

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
  double sigma = 0.0;
  double lp = 0.0;
};

double l2_norm(const ComplexField& f);
/// ||grad f||_{L2}.
double gradient_norm(const ComplexField& f);
/// L2, H1, Sigma (H1 plus ||x f||) and Lp norms.
Norms norms(const ComplexField& f, double p = 2.0);
/// L2 norm computed from the Fourier coefficients (Plancherel).
double fourier_l2_norm(const ComplexField& f);
/// ||(1 - Delta)^{s/2} f||_{L2}.
double sobolev_norm(const ComplexField& f, double s);

/// Evaluates the trigonometric interpolant of `f` at the tensor points
/// shift + scale * x_i of `target`. Points outside [-L, L)^d of the source
/// grid evaluate to zero unless `periodic` is set, in which case they wrap.
ComplexField fourier_resample(const ComplexField& f, double scale, const Point& shift,
                              const GridPtr& target, bool periodic = false);

/// Trigonometric interpolant at a single point (wrapping periodically).
cplx fourier_evaluate(const ComplexField& f, const Point& x);

// Binary snapshot: "NLSF", u32 version, u32 d, u32 N, f64 L, f64 t, then
// N^d interleaved (re, im) f64, all little-endian.
struct Snapshot {
  ComplexField field;
  double t;
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(const std::filesystem::path& path, const ComplexField& field, double t);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace bwlab
