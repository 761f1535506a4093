#include "bwlab/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

namespace bwlab {

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> t, std::vector<double> h)
    : t_(std::move(t)), h_(std::move(h)) {
  if (t_.empty() || t_.size() != h_.size())
    throw InvalidArgument("path: node and value arrays must be non-empty and equal length");
  for (std::size_t i = 1; i < t_.size(); ++i)
    if (!(t_[i] > t_[i - 1])) throw InvalidArgument("path: nodes must be strictly increasing");
}

PiecewiseLinearPath PiecewiseLinearPath::constant(double t0, double t1, double value) {
  return PiecewiseLinearPath({t0, t1}, {value, value});
}

double PiecewiseLinearPath::operator()(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  if (t < t_.front() - tol || t > t_.back() + tol)
    throw InvalidArgument("path: time " + std::to_string(t) + " outside [" +
                          std::to_string(t_.front()) + ", " + std::to_string(t_.back()) + "]");
  if (t_.size() == 1) return h_[0];
  t = std::clamp(t, t_.front(), t_.back());
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - t_.begin()), t_.size() - 1);
  if (i == 0) i = 1;
  const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
  return (1.0 - w) * h_[i - 1] + w * h_[i];
}

std::vector<double> uniform_nodes(double t0, double t1, double spacing) {
  if (!(t1 > t0) || !(spacing > 0.0)) throw InvalidArgument("uniform nodes: bad interval");
  const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / spacing - 1e-9));
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out[i] = t0 + (t1 - t0) * static_cast<double>(i) / n;
  return out;
}

std::vector<PiecewiseLinearPath> sample_brownian(int count, const std::vector<double>& nodes,
                                                 std::uint64_t seed) {
  if (count < 0) throw InvalidArgument("brownian: negative path count");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw InvalidArgument("brownian: nodes must increase");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PiecewiseLinearPath> out;
  for (int l = 0; l < count; ++l) {
    std::vector<double> h(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i)
      h[i] = h[i - 1] + std::sqrt(nodes[i] - nodes[i - 1]) * normal(rng);
    out.emplace_back(nodes, std::move(h));
  }
  return out;
}

void write_paths_csv(const std::filesystem::path& path,
                     const std::vector<PiecewiseLinearPath>& paths) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os.precision(17);
  os << "t";
  for (std::size_t l = 0; l < paths.size(); ++l) os << ",h_" << l + 1;
  os << "\n";
  if (paths.empty()) return;
  for (double t : paths.front().nodes()) {
    os << t;
    for (const auto& p : paths) os << "," << p(t);
    os << "\n";
  }
}

namespace {

double flat_factor(const FlatBuilderOptions& opt, int dim, const Point& x, int p) {
  double v = std::exp(-norm2(sub(x, opt.center), dim) / (opt.width * opt.width));
  for (const auto& xk : opt.singularities) {
    const double sp = std::pow(norm2(sub(x, xk), dim), p);
    v *= sp / (1.0 + sp);
  }
  return v;
}

}  // namespace

ScalarFunction build_flat_spatial(const FlatBuilderOptions& opt, int dim) {
  if (opt.order < 0) throw InvalidArgument("flat builder: negative order");
  if (!(opt.width > 0.0)) throw InvalidArgument("flat builder: width must be positive");
  const int p = (opt.order + 2) / 2;  // ceil((order + 1) / 2)
  return [opt, dim, p](const Point& x) { return opt.amplitude * flat_factor(opt, dim, x, p); };
}

ComplexFunction build_flat_profile(const FlatBuilderOptions& opt, int dim) {
  const auto f = build_flat_spatial(opt, dim);
  const cplx phase = cplx(1.0, 1.0) / std::sqrt(2.0);
  return [f, phase](const Point& x) { return f(x) * phase; };
}

double regular_residue_scale(const ComplexField& unit, int m) {
  const Grid& g = unit.grid();
  // High Sobolev weights amplify FFT rounding noise in the unresolved tail;
  // modes below the rounding floor of the profile are left out.
  const double s = 2.0 * m + 2.0 + g.dim();
  const auto hat = fft_forward(g, unit.values());
  double peak = 0.0;
  for (const auto& c : hat) peak = std::max(peak, std::abs(c));
  double acc = 0.0;
  for (std::size_t i = 0; i < hat.size(); ++i)
    if (std::abs(hat[i]) > 1e-13 * peak)
      acc += std::pow(1.0 + norm2(g.wavevector(i), g.dim()), s) * std::norm(hat[i]);
  const double hs = std::sqrt(acc / static_cast<double>(g.size()) * g.cell_volume());
  ComplexField weighted = unit;
  for (std::size_t i = 0; i < weighted.size(); ++i)
    weighted[i] *= std::sqrt(1.0 + norm2(g.point(i), g.dim()));
  const double hw = norms(weighted).h1;
  const double big = std::max(hs, hw);
  if (!(big > 0.0)) return 0.0;
  return 1.0 / big;
}

ComplexField build_regular_residue(const FlatBuilderOptions& opt, int m, double alpha_star,
                                   const GridPtr& grid) {
  if (alpha_star < 0.0) throw InvalidArgument("regular residue: alpha* must be >= 0");
  FlatBuilderOptions o = opt;
  o.amplitude = 1.0;
  o.order = 2 * m;
  const auto f = build_flat_profile(o, grid->dim());
  ComplexField unit = ComplexField::from_function(grid, f);
  if (alpha_star == 0.0) return ComplexField(grid);
  unit *= alpha_star * regular_residue_scale(unit, m);
  return unit;
}

std::vector<std::vector<double>> fornberg_weights(const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  const double z = 0.0;
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<std::vector<double>> out(m + 1, std::vector<double>(n));
  for (int k = 0; k <= m; ++k)
    for (int i = 0; i < n; ++i) out[k][i] = c[i][k];
  return out;
}

double verify_flatness(const ComplexFunction& f, const std::vector<Point>& points, int order,
                       int dim, double h) {
  if (order < 0) throw InvalidArgument("verify_flatness: negative order");
  // Wide central stencil: exact on polynomials well beyond the tested order.
  const int q = (order + 1) / 2 + 5;
  std::vector<double> offsets;
  for (int i = -q; i <= q; ++i) offsets.push_back(i * h);
  const auto w = fornberg_weights(offsets, order);
  const int n = static_cast<int>(offsets.size());
  double worst = 0.0;
  for (const auto& p : points) {
    if (dim == 1) {
      std::vector<cplx> vals(n);
      for (int i = 0; i < n; ++i) vals[i] = f(Point{p[0] + offsets[i], 0.0});
      for (int k = 0; k <= order; ++k) {
        cplx s(0.0, 0.0);
        for (int i = 0; i < n; ++i) s += w[k][i] * vals[i];
        worst = std::max(worst, std::abs(s));
      }
    } else {
      std::vector<cplx> vals(std::size_t(n) * n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) vals[i * n + j] = f(Point{p[0] + offsets[i], p[1] + offsets[j]});
      for (int a = 0; a <= order; ++a)
        for (int b = 0; a + b <= order; ++b) {
          cplx s(0.0, 0.0);
          for (int i = 0; i < n; ++i) {
            if (w[a][i] == 0.0) continue;
            cplx inner(0.0, 0.0);
            for (int j = 0; j < n; ++j) inner += w[b][j] * vals[i * n + j];
            s += w[a][i] * inner;
          }
          worst = std::max(worst, std::abs(s));
        }
    }
  }
  return worst;
}

namespace {

std::vector<double> real_part(const ComplexField& f) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].real();
  return out;
}

}  // namespace

PerturbationModel::PerturbationModel(GridPtr grid) : grid_(std::move(grid)) {}

PerturbationModel::PerturbationModel(GridPtr grid, std::vector<ScalarFunction> phi,
                                     std::vector<PiecewiseLinearPath> paths, int flatness_order)
    : grid_(std::move(grid)),
      phi_(std::move(phi)),
      paths_(std::move(paths)),
      flatness_order_(flatness_order) {
  if (phi_.size() != paths_.size())
    throw InvalidArgument("perturbation model: need one path per spatial function");
  const int d = grid_->dim();
  for (const auto& fn : phi_) {
    const ComplexField f = ComplexField::from_function(grid_, [&](const Point& x) {
      return cplx(fn(x), 0.0);
    });
    Cache c;
    c.phi = real_part(f);
    const auto g = spectral_gradient(f);
    for (int j = 0; j < d; ++j) c.grad.push_back(real_part(g[j]));
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const ComplexField hjk = j == k ? spectral_derivative(f, j, 2)
                                        : spectral_derivative(spectral_derivative(f, j, 1), k, 1);
        c.hess.push_back(real_part(hjk));
      }
    const ComplexField lap = spectral_laplacian(f);
    c.lap = real_part(lap);
    c.bilap = real_part(spectral_laplacian(lap));
    cache_.push_back(std::move(c));
  }
}

const std::vector<double>& PerturbationModel::hessian(int l, int j, int k) const {
  return cache_.at(l).hess.at(static_cast<std::size_t>(j * grid_->dim() + k));
}

std::vector<double> PerturbationModel::path_values(double t) const {
  std::vector<double> h(paths_.size());
  for (std::size_t l = 0; l < paths_.size(); ++l) h[l] = paths_[l](t);
  return h;
}

CoefficientSlice PerturbationModel::coefficients(double t) const {
  const int d = grid_->dim();
  CoefficientSlice s{{}, ComplexField(grid_), t};
  for (int j = 0; j < d; ++j) s.a1.emplace_back(grid_);
  if (is_free()) return s;
  const auto h = path_values(t);
  const std::size_t n = grid_->size();
  for (std::size_t i = 0; i < n; ++i) {
    double re = 0.0, im = 0.0;
    for (int j = 0; j < d; ++j) {
      double gj = 0.0;
      for (int l = 0; l < size(); ++l) gj += cache_[l].grad[j][i] * h[l];
      s.a1[j][i] = cplx(0.0, 2.0 * gj);
      re -= gj * gj;
    }
    for (int l = 0; l < size(); ++l) im += cache_[l].lap[i] * h[l];
    s.a0[i] = cplx(re, im);
  }
  return s;
}

double PerturbationModel::boundary_proxy() const {
  const int d = grid_->dim();
  const double L = grid_->half_width();
  double worst = 0.0;
  for (const auto& c : cache_) {
    ComplexField f(grid_);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = c.phi[i];
    std::vector<ComplexField> derivs;
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; b <= (d == 2 ? 3 - a : 0); ++b) {
        if (a + b == 0) continue;
        ComplexField g = a > 0 ? spectral_derivative(f, 0, a) : f;
        if (b > 0) g = spectral_derivative(g, 1, b);
        derivs.push_back(std::move(g));
      }
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Point x = grid_->point(i);
      bool near = false;
      for (int j = 0; j < d; ++j) near = near || std::abs(x[j]) >= L - 1.0;
      if (!near) continue;
      const double wx = 1.0 + norm2(x, d);
      for (const auto& g : derivs) worst = std::max(worst, wx * std::abs(g[i]));
    }
  }
  return worst;
}

ComplexField doss_sussman(const ComplexField& v, const PerturbationModel& model, double t,
                          Direction direction) {
  if (!(v.grid() == *model.grid())) throw InvalidArgument("doss_sussman: grid mismatch");
  ComplexField out = v;
  if (model.is_free()) return out;
  const auto h = model.path_values(t);
  const double sign = direction == Direction::forward ? 1.0 : -1.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double w = 0.0;
    for (int l = 0; l < model.size(); ++l) w += model.phi(l)[i] * h[l];
    out[i] *= std::polar(1.0, sign * w);
  }
  return out;
}

}  // namespace bwlab
