#include "bwlab/fields.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>

namespace bwlab {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// FFTW plans are created once per (d, N) and executed through the new-array
// interface, which is thread-safe. Planning itself is serialized.
class PlanCache {
 public:
  struct Plans {
    fftw_plan forward;
    fftw_plan backward;
  };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  const Plans& get(int dim, int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(dim, n);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t total = dim == 1 ? std::size_t(n) : std::size_t(n) * n;
    auto* a = fftw_alloc_complex(total);
    auto* b = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{};
    if (dim == 1) {
      p.forward = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, flags);
      p.backward = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, flags);
    } else {
      p.forward = fftw_plan_dft_2d(n, n, a, b, FFTW_FORWARD, flags);
      p.backward = fftw_plan_dft_2d(n, n, a, b, FFTW_BACKWARD, flags);
    }
    fftw_free(a);
    fftw_free(b);
    return plans_.emplace(key, p).first->second;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }
  std::mutex mutex_;
  std::map<std::pair<int, int>, Plans> plans_;
};

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

std::vector<cplx> execute(const Grid& grid, std::span<const cplx> in, bool forward) {
  if (in.size() != grid.size()) throw InvalidArgument("fft: size mismatch");
  const auto& plans = PlanCache::instance().get(grid.dim(), grid.n());
  std::vector<cplx> src(in.begin(), in.end());
  std::vector<cplx> out(in.size());
  fftw_execute_dft(forward ? plans.forward : plans.backward, as_fftw(src.data()),
                   as_fftw(out.data()));
  if (!forward) {
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (auto& v : out) v *= scale;
  }
  return out;
}

// Wavenumber used for odd-order derivatives: zero at the Nyquist index.
double odd_wavenumber(const Grid& grid, int j) {
  return j == grid.n() / 2 ? 0.0 : grid.wavenumbers()[j];
}

}  // namespace

Grid::Grid(int dim, double half_width, int n) : dim_(dim), half_width_(half_width), n_(n) {
  if (dim != 1 && dim != 2) throw InvalidArgument("grid: dimension must be 1 or 2");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw InvalidArgument("grid: half-width must be positive");
  if (!is_power_of_two(n) || n < 64)
    throw InvalidArgument("grid: N must be a power of two >= 64, got " + std::to_string(n));
  dx_ = 2.0 * half_width / n;
  size_ = dim == 1 ? std::size_t(n) : std::size_t(n) * std::size_t(n);
  wavenumbers_.resize(n);
  for (int j = 0; j < n; ++j) {
    const int jj = j < n / 2 ? j : j - n;
    wavenumbers_[j] = kPi * jj / half_width;
  }
}

Point Grid::point(std::size_t flat) const {
  if (dim_ == 1) return {coord(static_cast<int>(flat)), 0.0};
  return {coord(static_cast<int>(flat / n_)), coord(static_cast<int>(flat % n_))};
}

Point Grid::wavevector(std::size_t flat) const {
  if (dim_ == 1) return {wavenumbers_[flat], 0.0};
  return {wavenumbers_[flat / n_], wavenumbers_[flat % n_]};
}

GridPtr make_grid(int dim, double half_width, int n) {
  return std::make_shared<const Grid>(dim, half_width, n);
}

ComplexField::ComplexField(GridPtr grid) : grid_(std::move(grid)) {
  if (!grid_) throw InvalidArgument("field: null grid");
  values_.assign(grid_->size(), cplx(0.0, 0.0));
}

ComplexField::ComplexField(GridPtr grid, std::vector<cplx> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw InvalidArgument("field: null grid");
  if (values_.size() != grid_->size())
    throw InvalidArgument("field: expected " + std::to_string(grid_->size()) + " samples");
}

bool ComplexField::all_finite() const {
  for (const auto& v : values_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double ComplexField::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

void require_same_grid(const ComplexField& a, const ComplexField& b) {
  if (a.grid_ptr() != b.grid_ptr() && !(a.grid() == b.grid()))
    throw InvalidArgument("fields live on different grids");
}

ComplexField& ComplexField::operator+=(const ComplexField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ComplexField& ComplexField::operator-=(const ComplexField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ComplexField& ComplexField::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  return *this;
}

ComplexField& ComplexField::multiply(const ComplexField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
  return *this;
}

ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
ComplexField operator*(cplx s, ComplexField a) { return a *= s; }

std::vector<cplx> fft_forward(const Grid& grid, std::span<const cplx> in) {
  return execute(grid, in, true);
}

std::vector<cplx> fft_inverse(const Grid& grid, std::span<const cplx> in) {
  return execute(grid, in, false);
}

ComplexField apply_fourier_multiplier(const ComplexField& f,
                                      const std::function<cplx(const Point&)>& symbol) {
  const Grid& g = f.grid();
  auto hat = fft_forward(g, f.values());
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= symbol(g.wavevector(i));
  return ComplexField(f.grid_ptr(), fft_inverse(g, hat));
}

ComplexField spectral_derivative(const ComplexField& f, int axis, int order) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.dim()) throw InvalidArgument("derivative: bad axis");
  auto hat = fft_forward(g, f.values());
  const int n = g.n();
  for (std::size_t i = 0; i < hat.size(); ++i) {
    const int j = g.dim() == 1 ? static_cast<int>(i) : (axis == 0 ? int(i / n) : int(i % n));
    const double k = (order % 2 == 1) ? odd_wavenumber(g, j) : g.wavenumbers()[j];
    hat[i] *= std::pow(cplx(0.0, k), order);
  }
  return ComplexField(f.grid_ptr(), fft_inverse(g, hat));
}

std::vector<ComplexField> spectral_gradient(const ComplexField& f) {
  const Grid& g = f.grid();
  const auto hat = fft_forward(g, f.values());
  std::vector<ComplexField> out;
  const int n = g.n();
  for (int axis = 0; axis < g.dim(); ++axis) {
    std::vector<cplx> h(hat.size());
    for (std::size_t i = 0; i < hat.size(); ++i) {
      const int j = g.dim() == 1 ? static_cast<int>(i) : (axis == 0 ? int(i / n) : int(i % n));
      h[i] = cplx(0.0, odd_wavenumber(g, j)) * hat[i];
    }
    out.emplace_back(f.grid_ptr(), fft_inverse(g, h));
  }
  return out;
}

ComplexField spectral_laplacian(const ComplexField& f) {
  return apply_fourier_multiplier(f, [dim = f.grid().dim()](const Point& k) {
    return cplx(-norm2(k, dim), 0.0);
  });
}

cplx inner_product(const ComplexField& f, const ComplexField& g) {
  require_same_grid(f, g);
  cplx s(0.0, 0.0);
  const auto a = f.values();
  const auto b = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s * f.grid().cell_volume();
}

double l2_norm(const ComplexField& f) { return std::sqrt(inner_product(f, f).real()); }

double gradient_norm(const ComplexField& f) {
  double s = 0.0;
  for (const auto& c : spectral_gradient(f)) s += inner_product(c, c).real();
  return std::sqrt(s);
}

Norms norms(const ComplexField& f, double p) {
  const Grid& g = f.grid();
  Norms out;
  const double l2sq = inner_product(f, f).real();
  const double grad = gradient_norm(f);
  double xsq = 0.0;
  double lp = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    xsq += norm2(g.point(i), g.dim()) * a * a;
    lp += std::pow(a, p);
  }
  xsq *= g.cell_volume();
  lp *= g.cell_volume();
  out.l2 = std::sqrt(l2sq);
  out.h1 = std::sqrt(l2sq + grad * grad);
  out.sigma = std::sqrt(l2sq + grad * grad + xsq);
  out.lp = std::pow(lp, 1.0 / p);
  return out;
}

double fourier_l2_norm(const ComplexField& f) {
  const Grid& g = f.grid();
  const auto hat = fft_forward(g, f.values());
  double s = 0.0;
  for (const auto& c : hat) s += std::norm(c);
  // Parseval: sum |f_i|^2 = sum |hat_j|^2 / N^d.
  return std::sqrt(s / static_cast<double>(g.size()) * g.cell_volume());
}

double sobolev_norm(const ComplexField& f, double s) {
  const Grid& g = f.grid();
  const auto hat = fft_forward(g, f.values());
  double acc = 0.0;
  for (std::size_t i = 0; i < hat.size(); ++i)
    acc += std::pow(1.0 + norm2(g.wavevector(i), g.dim()), s) * std::norm(hat[i]);
  return std::sqrt(acc / static_cast<double>(g.size()) * g.cell_volume());
}

namespace {

// Rows: target points; columns: Fourier modes of the source grid.
Eigen::MatrixXcd evaluation_matrix(const Grid& src, std::span<const double> points,
                                   bool periodic) {
  const int n = src.n();
  const double L = src.half_width();
  Eigen::MatrixXcd e(static_cast<Eigen::Index>(points.size()), n);
  for (std::size_t m = 0; m < points.size(); ++m) {
    double p = points[m];
    if (periodic) {
      p = std::fmod(p + L, 2.0 * L);
      if (p < 0) p += 2.0 * L;
      p -= L;
    }
    const bool inside = p >= -L && p < L;
    for (int j = 0; j < n; ++j) {
      if (!inside) {
        e(m, j) = 0.0;
        continue;
      }
      const double phase = src.wavenumbers()[j] * (p + L);
      e(m, j) = j == n / 2 ? cplx(std::cos(phase), 0.0) : std::polar(1.0, phase);
    }
  }
  return e;
}

}  // namespace

ComplexField fourier_resample(const ComplexField& f, double scale, const Point& shift,
                              const GridPtr& target, bool periodic) {
  const Grid& src = f.grid();
  if (target->dim() != src.dim()) throw InvalidArgument("resample: dimension mismatch");
  const int n = src.n();
  const int m = target->n();
  auto hat = fft_forward(src, f.values());
  const double inv = 1.0 / static_cast<double>(src.size());
  std::vector<double> p0(m), p1(m);
  for (int i = 0; i < m; ++i) {
    p0[i] = shift[0] + scale * target->coord(i);
    p1[i] = shift[1] + scale * target->coord(i);
  }
  ComplexField out(target);
  if (src.dim() == 1) {
    Eigen::Map<Eigen::VectorXcd> c(hat.data(), n);
    Eigen::VectorXcd r = evaluation_matrix(src, p0, periodic) * c * inv;
    for (int i = 0; i < m; ++i) out[i] = r(i);
    return out;
  }
  // Row-major N x N coefficient array: hat[j0 * n + j1].
  Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(hat.data(), n,
                                                                                    n);
  const Eigen::MatrixXcd e0 = evaluation_matrix(src, p0, periodic);
  const Eigen::MatrixXcd e1 = evaluation_matrix(src, p1, periodic);
  const Eigen::MatrixXcd r = e0 * (c * e1.transpose()) * inv;
  for (int i0 = 0; i0 < m; ++i0)
    for (int i1 = 0; i1 < m; ++i1) out[std::size_t(i0) * m + i1] = r(i0, i1);
  return out;
}

cplx fourier_evaluate(const ComplexField& f, const Point& x) {
  const Grid& g = f.grid();
  const auto hat = fft_forward(g, f.values());
  const double L = g.half_width();
  const int n = g.n();
  auto basis = [&](int j, double p) {
    const double phase = g.wavenumbers()[j] * (p + L);
    return j == n / 2 ? cplx(std::cos(phase), 0.0) : std::polar(1.0, phase);
  };
  cplx s(0.0, 0.0);
  if (g.dim() == 1) {
    for (int j = 0; j < n; ++j) s += hat[j] * basis(j, x[0]);
  } else {
    for (int j0 = 0; j0 < n; ++j0) {
      const cplx b0 = basis(j0, x[0]);
      for (int j1 = 0; j1 < n; ++j1) s += hat[std::size_t(j0) * n + j1] * b0 * basis(j1, x[1]);
    }
  }
  return s / static_cast<double>(g.size());
}

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw Error("snapshot: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const ComplexField& field, double t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("snapshot: cannot open " + path.string());
  os.write("NLSF", 4);
  const Grid& g = field.grid();
  put_le<std::uint32_t>(os, kSnapshotVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n()));
  put_le<double>(os, g.half_width());
  put_le<double>(os, t);
  for (const auto& v : field.values()) {
    put_le<double>(os, v.real());
    put_le<double>(os, v.imag());
  }
  if (!os) throw Error("snapshot: write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("snapshot: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NLSF", 4) != 0) throw Error("snapshot: bad magic");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kSnapshotVersion) throw Error("snapshot: unsupported version");
  const auto dim = get_le<std::uint32_t>(is);
  const auto n = get_le<std::uint32_t>(is);
  const double L = get_le<double>(is);
  const double t = get_le<double>(is);
  auto grid = make_grid(static_cast<int>(dim), L, static_cast<int>(n));
  std::vector<cplx> values(grid->size());
  for (auto& v : values) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    v = cplx(re, im);
  }
  return {ComplexField(grid, std::move(values)), t};
}

}  // namespace bwlab
