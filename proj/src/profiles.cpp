#include "bwlab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bwlab {

void validate_bubbles(const std::vector<BubbleSpec>& specs, int dim) {
  if (specs.empty()) throw InvalidArgument("bubbles: at least one bubble is required");
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (!(specs[k].w > 0.0)) throw InvalidArgument("bubbles: w_k must be positive");
    for (std::size_t l = 0; l < k; ++l)
      if (norm2(sub(specs[k].x, specs[l].x), dim) == 0.0)
        throw InvalidArgument("bubbles: blow-up points must be distinct");
  }
}

void ModulationState::validate() const {
  if (bubbles.empty()) throw InvalidArgument("modulation state: K must be >= 1");
  for (const auto& b : bubbles) {
    if (!(b.lambda > 0.0)) throw InvalidArgument("modulation state: lambda must be positive");
    const double all[] = {b.lambda, b.alpha[0], b.alpha[1], b.beta[0],
                          b.beta[1], b.gamma,    b.theta};
    for (double v : all)
      if (!std::isfinite(v)) throw InvalidArgument("modulation state: non-finite parameter");
  }
}

std::vector<double> pack(const ModulationState& s, int dim) {
  std::vector<double> v;
  v.reserve(s.bubbles.size() * params_per_bubble(dim));
  for (const auto& b : s.bubbles) {
    v.push_back(b.lambda);
    for (int j = 0; j < dim; ++j) v.push_back(b.alpha[j]);
    for (int j = 0; j < dim; ++j) v.push_back(b.beta[j]);
    v.push_back(b.gamma);
    v.push_back(b.theta);
  }
  return v;
}

ModulationState unpack(const std::vector<double>& v, int dim, double t) {
  const int n = params_per_bubble(dim);
  if (v.size() % n != 0) throw InvalidArgument("unpack: length is not a multiple of 2d+3");
  ModulationState s;
  s.t = t;
  for (std::size_t o = 0; o < v.size(); o += n) {
    BubbleParams b;
    std::size_t i = o;
    b.lambda = v[i++];
    for (int j = 0; j < dim; ++j) b.alpha[j] = v[i++];
    for (int j = 0; j < dim; ++j) b.beta[j] = v[i++];
    b.gamma = v[i++];
    b.theta = v[i++];
    s.bubbles.push_back(b);
  }
  return s;
}

ModulationState boundary_parameters(const std::vector<BubbleSpec>& specs, double T, double t_star) {
  if (!(t_star < T)) throw InvalidArgument("boundary parameters: need t < T");
  ModulationState s;
  s.t = t_star;
  const double tau = T - t_star;
  for (const auto& sp : specs) {
    BubbleParams b;
    b.lambda = sp.w * tau;
    b.alpha = sp.x;
    b.beta = {0.0, 0.0};
    b.gamma = sp.w * sp.w * tau;
    b.theta = 1.0 / (sp.w * sp.w * tau) + sp.phase;
    s.bubbles.push_back(b);
  }
  return s;
}

void check_resolution(double lambda, const Grid& grid) {
  if (!(lambda >= 8.0 * grid.dx()))
    throw ResolutionError("profile scale " + std::to_string(lambda) + " is below 8 dx = " +
                          std::to_string(8.0 * grid.dx()));
}

ComplexField eval_pseudoconformal_bubble(const BubbleSpec& spec, const GroundStateTable& gs,
                                         const GridPtr& grid, double T, double t) {
  if (!(t < T)) throw InvalidArgument("pseudo-conformal profile: need t < T");
  const int d = grid->dim();
  const double tau = T - t;
  const double lam = spec.w * tau;
  check_resolution(lam, *grid);
  const double amp = std::pow(lam, -0.5 * d);
  return ComplexField::from_function(grid, [&](const Point& x) {
    const double r2 = norm2(sub(x, spec.x), d);
    const double q = gs.ground(std::sqrt(r2) / lam).value;
    return amp * q * std::polar(1.0, -r2 / (4.0 * tau) + 1.0 / (spec.w * spec.w * tau) + spec.phase);
  });
}

ComplexField eval_pseudoconformal(const std::vector<BubbleSpec>& specs, const GroundStateTable& gs,
                                  const GridPtr& grid, double T, double t) {
  ComplexField out(grid);
  for (const auto& sp : specs) out += eval_pseudoconformal_bubble(sp, gs, grid, T, t);
  return out;
}

namespace {

cplx soliton_value(const BubbleSpec& sp, const GroundStateTable& gs, int d, double t,
                   const Point& x) {
  const Point center{sp.c[0] * t, sp.c[1] * t};
  const double r = std::sqrt(norm2(sub(x, center), d)) / sp.w;
  const double ph = 0.5 * dot(sp.c, x, d) - 0.25 * norm2(sp.c, d) * t + t / (sp.w * sp.w) + sp.phase;
  return std::pow(sp.w, -0.5 * d) * gs.ground(r).value * std::polar(1.0, ph);
}

cplx pseudoconformal_value(const BubbleSpec& sp, const GroundStateTable& gs, int d, double T,
                           double t, const Point& x) {
  const double tau = T - t;
  const double lam = sp.w * tau;
  const double r2 = norm2(sub(x, sp.x), d);
  return std::pow(lam, -0.5 * d) * gs.ground(std::sqrt(r2) / lam).value *
         std::polar(1.0, -r2 / (4.0 * tau) + 1.0 / (sp.w * sp.w * tau) + sp.phase);
}

}  // namespace

ComplexField eval_soliton(const std::vector<BubbleSpec>& specs, const GroundStateTable& gs,
                          const GridPtr& grid, double t) {
  const int d = grid->dim();
  const double safe = grid->half_width() - 3.0;
  for (const auto& sp : specs)
    for (int j = 0; j < d; ++j)
      if (std::abs(sp.c[j] * t) > safe)
        throw InvalidArgument("soliton: center leaves the safe region of the box");
  return ComplexField::from_function(grid, [&](const Point& x) {
    cplx s(0.0, 0.0);
    for (const auto& sp : specs) s += soliton_value(sp, gs, d, t, x);
    return s;
  });
}

ModulatedProfile eval_modulated(const ModulationState& state, const GroundStateTable& gs,
                                const GridPtr& grid, bool with_derivatives) {
  state.validate();
  const int d = grid->dim();
  ModulatedProfile out{{}, ComplexField(grid)};
  for (const auto& p : state.bubbles) {
    check_resolution(p.lambda, *grid);
    ModulatedBubble b{ComplexField(grid), {}, ComplexField(grid), ComplexField(grid), {},
                      ComplexField(grid)};
    if (with_derivatives) {
      for (int j = 0; j < d; ++j) {
        b.grad_u.emplace_back(grid);
        b.xu.emplace_back(grid);
      }
    }
    const double amp = std::pow(p.lambda, -0.5 * d);
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const Point x = grid->point(i);
      const Point y{(x[0] - p.alpha[0]) / p.lambda, d == 2 ? (x[1] - p.alpha[1]) / p.lambda : 0.0};
      const double r2 = norm2(y, d);
      const double r = std::sqrt(r2);
      const RadialSample s = gs.ground(r);
      const cplx e = amp * std::polar(1.0, dot(p.beta, y, d) - 0.25 * p.gamma * r2 + p.theta);
      const cplx u = s.value * e;
      b.u[i] = u;
      if (!with_derivatives) continue;
      // grad_x U = lambda^{-1} e (grad Q + i Q (beta - gamma y / 2)).
      double ydq = 0.0;
      for (int j = 0; j < d; ++j) {
        const double dq = r > 0.0 ? s.derivative * y[j] / r : 0.0;
        ydq += y[j] * dq;
        b.grad_u[j][i] = e * cplx(dq, s.value * (p.beta[j] - 0.5 * p.gamma * y[j])) / p.lambda;
        b.xu[j][i] = p.lambda * y[j] * u;
      }
      b.lambda_u[i] =
          e * cplx(0.5 * d * s.value + ydq, s.value * (dot(p.beta, y, d) - 0.5 * p.gamma * r2));
      b.r2u[i] = p.lambda * p.lambda * r2 * u;
      if (gs.has_rho) b.rho[i] = gs.profile_rho(r).value * e;
    }
    out.sum += b.u;
    out.bubbles.push_back(std::move(b));
  }
  return out;
}

ComplexField eval_modulated_sum(const ModulationState& state, const GroundStateTable& gs,
                                const GridPtr& grid) {
  return eval_modulated(state, gs, grid, false).sum;
}

ComplexField spectral_scaling_generator(const ComplexField& f, const Point& alpha) {
  const Grid& g = f.grid();
  const auto grad = spectral_gradient(f);
  ComplexField out = f;
  out *= 0.5 * g.dim();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point x = g.point(i);
    for (int j = 0; j < g.dim(); ++j) out[i] += (x[j] - alpha[j]) * grad[j][i];
  }
  return out;
}

std::vector<ComplexField> parameter_derivatives(const BubbleParams& p, const ModulatedBubble& b,
                                                const GridPtr& grid) {
  const int d = grid->dim();
  if (static_cast<int>(b.grad_u.size()) != d)
    throw InvalidArgument("parameter derivatives: bubble was evaluated without derivatives");
  std::vector<ComplexField> out;
  ComplexField dl = b.lambda_u;
  dl *= -1.0 / p.lambda;
  out.push_back(std::move(dl));
  for (int j = 0; j < d; ++j) {
    ComplexField da = b.grad_u[j];
    da *= -1.0;
    out.push_back(std::move(da));
  }
  for (int j = 0; j < d; ++j) {
    // i y_j U = i (x - alpha)_j U / lambda.
    ComplexField db = b.xu[j];
    db *= cplx(0.0, 1.0 / p.lambda);
    out.push_back(std::move(db));
  }
  ComplexField dg = b.r2u;
  dg *= cplx(0.0, -0.25 / (p.lambda * p.lambda));
  out.push_back(std::move(dg));
  ComplexField dt = b.u;
  dt *= cplx(0.0, 1.0);
  out.push_back(std::move(dt));
  return out;
}

SolitonSampler::SolitonSampler(std::vector<BubbleSpec> specs, const GroundStateTable& gs)
    : specs_(std::move(specs)), gs_(gs) {}

ComplexField SolitonSampler::sample(double s, double scale, const GridPtr& target) const {
  const int d = target->dim();
  return ComplexField::from_function(target, [&](const Point& x) {
    const Point xs{scale * x[0], scale * x[1]};
    cplx v(0.0, 0.0);
    for (const auto& sp : specs_) v += soliton_value(sp, gs_, d, s, xs);
    return v;
  });
}

PseudoconformalSampler::PseudoconformalSampler(std::vector<BubbleSpec> specs,
                                               const GroundStateTable& gs, double T)
    : specs_(std::move(specs)), gs_(gs), T_(T) {}

ComplexField PseudoconformalSampler::sample(double s, double scale, const GridPtr& target) const {
  if (!(s < T_)) throw InvalidArgument("pseudo-conformal sampler: need s < T");
  const int d = target->dim();
  return ComplexField::from_function(target, [&](const Point& x) {
    const Point xs{scale * x[0], scale * x[1]};
    cplx v(0.0, 0.0);
    for (const auto& sp : specs_) v += pseudoconformal_value(sp, gs_, d, T_, s, xs);
    return v;
  });
}

void StoredTrajectory::add(double t, ComplexField f) {
  if (!times_.empty()) require_same_grid(fields_.front(), f);
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it != times_.end() && *it == t)
    throw InvalidArgument("stored trajectory: duplicate snapshot time");
  const auto pos = it - times_.begin();
  times_.insert(it, t);
  fields_.insert(fields_.begin() + pos, std::move(f));
}

double StoredTrajectory::t_min() const {
  if (times_.empty()) throw Error("stored trajectory: empty");
  return times_.front();
}

double StoredTrajectory::t_max() const {
  if (times_.empty()) throw Error("stored trajectory: empty");
  return times_.back();
}

ComplexField StoredTrajectory::at(double s) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(s));
  if (times_.empty() || s < times_.front() - tol || s > times_.back() + tol)
    throw InvalidArgument("stored trajectory: time " + std::to_string(s) +
                          " outside the stored range");
  auto it = std::lower_bound(times_.begin(), times_.end(), s - tol);
  std::size_t i = static_cast<std::size_t>(it - times_.begin());
  if (i < times_.size() && std::abs(times_[i] - s) <= tol) return fields_[i];
  // s lies strictly between times_[i-1] and times_[i].
  const double w = (s - times_[i - 1]) / (times_[i] - times_[i - 1]);
  ComplexField out = fields_[i - 1];
  out *= 1.0 - w;
  ComplexField b = fields_[i];
  b *= w;
  out += b;
  return out;
}

ComplexField StoredTrajectory::sample(double s, double scale, const GridPtr& target) const {
  return fourier_resample(at(s), scale, Point{0.0, 0.0}, target, false);
}

ComplexField pseudoconformal_transform(const TrajectorySampler& u, double T, double t,
                                       const GridPtr& target) {
  const double tau = T - t;
  if (tau == 0.0) throw InvalidArgument("pseudo-conformal transform: t must differ from T");
  const int d = target->dim();
  ComplexField inner = u.sample(1.0 / tau, 1.0 / tau, target);
  const double amp = std::pow(std::abs(tau), -0.5 * d);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double r2 = norm2(target->point(i), d);
    inner[i] *= amp * std::polar(1.0, -r2 / (4.0 * tau));
  }
  return inner;
}

ComplexField inverse_pseudoconformal_transform(const TrajectorySampler& z, double T, double t,
                                               const GridPtr& target) {
  if (t == 0.0) throw InvalidArgument("inverse pseudo-conformal transform: t must be nonzero");
  const int d = target->dim();
  ComplexField inner = z.sample(T - 1.0 / t, 1.0 / t, target);
  const double amp = std::pow(std::abs(t), -0.5 * d);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double r2 = norm2(target->point(i), d);
    inner[i] *= amp * std::polar(1.0, r2 / (4.0 * t));
  }
  return inner;
}

}  // namespace bwlab
