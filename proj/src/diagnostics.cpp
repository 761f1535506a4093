#include "bwlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bwlab {

cplx nonlinearity(cplx v, int dim) {
  const double m2 = std::norm(v);
  return (dim == 1 ? m2 * m2 : m2) * v;
}

double potential_density(cplx v, int dim) {
  const double m2 = std::norm(v);
  return dim == 1 ? m2 * m2 * m2 / 6.0 : 0.25 * m2 * m2;
}

double energy(const ComplexField& v) {
  const int d = v.grid().dim();
  double pot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) pot += potential_density(v[i], d);
  const double g = gradient_norm(v);
  return 0.5 * g * g - pot * v.grid().cell_volume();
}

double energy_variation_rhs(const ComplexField& v, const PerturbationModel& model, double t) {
  if (model.is_free()) return 0.0;
  const Grid& g = v.grid();
  const int d = g.dim();
  const auto h = model.path_values(t);
  const auto grad = spectral_gradient(v);
  const std::size_t n = v.size();

  double hess_term = 0.0, bilap_term = 0.0, pot_term = 0.0;
  for (int l = 0; l < model.size(); ++l) {
    if (h[l] == 0.0) continue;
    const auto& lap = model.laplacian(l);
    const auto& bil = model.bilaplacian(l);
    double a = 0.0, b = 0.0, c = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const auto& hij = model.hessian(l, i, j);
        for (std::size_t p = 0; p < n; ++p) a += hij[p] * (grad[i][p] * std::conj(grad[j][p])).real();
      }
    for (std::size_t p = 0; p < n; ++p) {
      const double m2 = std::norm(v[p]);
      b += bil[p] * m2;
      c += lap[p] * (d == 1 ? m2 * m2 * m2 : m2 * m2);
    }
    hess_term += h[l] * a;
    bilap_term += h[l] * b;
    pot_term += h[l] * c;
  }

  // g_j = sum_l h_l d_j phi_l; grad (g_j^2) = 2 g_j sum_l h_l grad d_j phi_l.
  double drift = 0.0;
  for (int j = 0; j < d; ++j) {
    std::vector<double> gj(n, 0.0);
    std::vector<std::vector<double>> dgj(d, std::vector<double>(n, 0.0));
    for (int l = 0; l < model.size(); ++l) {
      if (h[l] == 0.0) continue;
      const auto& gr = model.grad(l, j);
      for (std::size_t p = 0; p < n; ++p) gj[p] += h[l] * gr[p];
      for (int i = 0; i < d; ++i) {
        const auto& hij = model.hessian(l, i, j);
        for (std::size_t p = 0; p < n; ++p) dgj[i][p] += h[l] * hij[p];
      }
    }
    for (int i = 0; i < d; ++i)
      for (std::size_t p = 0; p < n; ++p)
        drift += 2.0 * gj[p] * dgj[i][p] * (grad[i][p] * std::conj(v[p])).imag();
  }
  const double dv = g.cell_volume();
  return dv * (-2.0 * hess_term + 0.5 * bilap_term + 2.0 / (d + 2.0) * pot_term - drift);
}

CutoffChi::CutoffChi(double A) : A_(A) {
  if (!(A >= 1.0)) throw InvalidArgument("cutoff: A must be >= 1");
  // Targets for g = psi'/r at r = 2.
  const double e = std::exp(-2.0);
  const double g2 = (2.0 - e) / 2.0;
  p_ = (3.0 * e - 2.0) / 4.0;   // g'(2)
  const double s2 = 0.5 - 1.25 * e;  // g''(2)
  const double drop = g2 - 1.0;
  auto residual = [&](double k) {
    return p_ / (k + 1.0) - (s2 - k * p_) / ((k + 1.0) * (k + 2.0)) - drop;
  };
  double lo = 1.0 + 1e-9, hi = 100.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(lo) * residual(mid) <= 0.0 ? hi : lo) = mid;
  }
  k_ = 0.5 * (lo + hi);
  q_ = s2 - k_ * p_;
}

PsiJet CutoffChi::psi(double r) const {
  PsiJet out;
  if (r <= 1.0) {
    out.d1 = r;
    out.d2 = 1.0;
    return out;
  }
  if (r >= 2.0) {
    const double e = std::exp(-r);
    out.d1 = 2.0 - e;
    out.d2 = e;
    out.d3 = -e;
    return out;
  }
  const double u = r - 1.0;
  const double uk = std::pow(u, k_);
  const double s = uk * (p_ + q_ * (u - 1.0));
  const double ds = k_ * std::pow(u, k_ - 1.0) * (p_ + q_ * (u - 1.0)) + q_ * uk;
  const double g = 1.0 + p_ * uk * u / (k_ + 1.0) + q_ * (uk * u * u / (k_ + 2.0) - uk * u / (k_ + 1.0));
  out.d1 = r * g;
  out.d2 = g + r * s;
  out.d3 = 2.0 * s + r * ds;
  return out;
}

Point CutoffChi::grad_chi_A(const Point& y, int dim) const {
  const double r = std::sqrt(norm2(y, dim));
  if (r == 0.0) return {0.0, 0.0};
  const double s = A_ * psi(r / A_).d1 / r;
  return {s * y[0], dim == 2 ? s * y[1] : 0.0};
}

CutoffReport check_cutoff(const CutoffChi& chi, int samples, double r_max) {
  CutoffReport rep;
  rep.min_convexity = std::numeric_limits<double>::infinity();
  rep.min_second = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= samples; ++i) {
    const double r = r_max * i / samples;
    const PsiJet j = chi.psi(r);
    rep.min_convexity = std::min(rep.min_convexity, j.d1 / r - j.d2);
    rep.min_second = std::min(rep.min_second, j.d2);
    if (j.d2 > 1e-8) rep.ratio_bound = std::max(rep.ratio_bound, std::abs(j.d3 / j.d2));
  }
  return rep;
}

double generalized_energy(const ComplexField& R, const ModulationState& params,
                          const ComplexField& z, const ComplexField& v, const LocalizerSet& loc,
                          const CutoffChi& chi) {
  require_same_grid(R, z);
  require_same_grid(R, v);
  const Grid& g = R.grid();
  const int d = g.dim();
  const std::size_t n = R.size();
  const auto grad = spectral_gradient(R);
  const double gn = gradient_norm(R);
  double total = 0.5 * gn * gn;

  double mass_term = 0.0, nonlinear = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cplx w = v[i] - R[i];  // U + z
    nonlinear += potential_density(v[i], d) - potential_density(w, d) -
                 (nonlinearity(w, d) * std::conj(R[i])).real();
  }
  double morawetz = 0.0;
  for (std::size_t k = 0; k < params.bubbles.size(); ++k) {
    const BubbleParams& b = params.bubbles[k];
    const ComplexField& phi = loc.phi.at(k);
    double mk = 0.0, mw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = phi[i].real();
      if (p == 0.0) continue;
      mk += std::norm(R[i]) * p;
      const Point x = g.point(i);
      const Point y{(x[0] - b.alpha[0]) / b.lambda, (x[1] - b.alpha[1]) / b.lambda};
      const Point gc = chi.grad_chi_A(y, d);
      cplx s(0.0, 0.0);
      for (int j = 0; j < d; ++j) s += gc[j] * grad[j][i];
      mw += (s * std::conj(R[i])).imag() * p;
    }
    mass_term += mk / (b.lambda * b.lambda);
    morawetz += b.gamma / (2.0 * b.lambda) * mw;
  }
  const double dv = g.cell_volume();
  total += 0.5 * mass_term * dv - nonlinear * dv + morawetz * dv;
  return total;
}

EtaFields eta_fields(const ModulationState& params, const ModulationState& rates,
                     const PerturbationModel& model, const GroundStateTable& gs,
                     const ComplexField& z) {
  const GridPtr& grid = z.grid_ptr();
  const int d = grid->dim();
  const std::size_t n = z.size();
  if (rates.bubbles.size() != params.bubbles.size())
    throw InvalidArgument("eta: rates and parameters differ in bubble count");
  const ModulatedProfile prof = eval_modulated(params, gs, grid, true);

  EtaFields out{ComplexField(grid),
                {ComplexField(grid), ComplexField(grid), ComplexField(grid), ComplexField(grid)}};
  ComplexField sum_fk(grid);
  for (std::size_t k = 0; k < prof.bubbles.size(); ++k) {
    const ModulatedBubble& b = prof.bubbles[k];
    const BubbleParams& p = params.bubbles[k];
    const auto dU = parameter_derivatives(p, b, grid);
    const std::vector<double> rate = pack(ModulationState{rates.t, {rates.bubbles[k]}}, d);
    ComplexField eta1 = spectral_laplacian(b.u);
    for (std::size_t c = 0; c < dU.size(); ++c)
      for (std::size_t i = 0; i < n; ++i) eta1[i] += cplx(0.0, rate[c]) * dU[c][i];
    for (std::size_t i = 0; i < n; ++i) {
      const cplx f = nonlinearity(b.u[i], d);
      eta1[i] += f;
      sum_fk[i] += f;
    }
    out.parts[0] += eta1;
  }
  const ComplexField& U = prof.sum;
  for (std::size_t i = 0; i < n; ++i) {
    const cplx fU = nonlinearity(U[i], d);
    out.parts[1][i] = nonlinearity(U[i] + z[i], d) - fU - nonlinearity(z[i], d);
    out.parts[2][i] = fU - sum_fk[i];
  }
  if (!model.is_free()) {
    const CoefficientSlice c = model.coefficients(params.t);
    const auto grad = spectral_gradient(U);
    for (std::size_t i = 0; i < n; ++i) {
      cplx s = c.a0[i] * U[i];
      for (int j = 0; j < d; ++j) s += c.a1[j][i] * grad[j][i];
      out.parts[3][i] = s;
    }
  }

  // The full eta, assembled directly rather than as the sum of the parts.
  ComplexField dUdt(grid);
  for (std::size_t k = 0; k < prof.bubbles.size(); ++k) {
    const auto dU = parameter_derivatives(params.bubbles[k], prof.bubbles[k], grid);
    const std::vector<double> rate = pack(ModulationState{rates.t, {rates.bubbles[k]}}, d);
    for (std::size_t c = 0; c < dU.size(); ++c)
      for (std::size_t i = 0; i < n; ++i) dUdt[i] += rate[c] * dU[c][i];
  }
  out.eta = spectral_laplacian(U);
  for (std::size_t i = 0; i < n; ++i)
    out.eta[i] += cplx(0.0, 1.0) * dUdt[i] + nonlinearity(U[i] + z[i], d) - nonlinearity(z[i], d) +
                  out.parts[3][i];
  return out;
}

EtaReport eta_residual(const ModulationState& params, const ModulationState& rates,
                       const PerturbationModel& model, const GroundStateTable& gs,
                       const ComplexField& z) {
  const EtaFields f = eta_fields(params, rates, model, gs, z);
  EtaReport rep;
  rep.total = l2_norm(f.eta);
  ComplexField defect = f.eta;
  for (int i = 0; i < 4; ++i) {
    rep.parts[i] = l2_norm(f.parts[i]);
    defect -= f.parts[i];
  }
  rep.split_defect = l2_norm(defect);
  return rep;
}

RateFit rate_fit(const std::vector<double>& t, const std::vector<double>& y, double T) {
  if (t.size() != y.size()) throw InvalidArgument("rate fit: size mismatch");
  if (t.size() < 4) throw InvalidArgument("rate fit: need at least 4 points");
  const std::size_t n = t.size();
  std::vector<double> X(n), Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) throw InvalidArgument("rate fit: nonpositive sample");
    if (!(T - t[i] > 0.0)) throw InvalidArgument("rate fit: sample at or after T");
    X[i] = std::log(T - t[i]);
    Y[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += X[i], my += Y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
    syy += (Y[i] - my) * (Y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("rate fit: all samples at the same time");
  RateFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return out;
}

MassQuantization mass_quantization(const ComplexField& v, const std::vector<Point>& centers,
                                   double radius) {
  const Grid& g = v.grid();
  const int d = g.dim();
  for (std::size_t a = 0; a < centers.size(); ++a) {
    for (int j = 0; j < d; ++j)
      if (std::abs(centers[a][j]) + radius > g.half_width())
        throw InvalidArgument("mass quantization: ball leaves the box");
    for (std::size_t b = 0; b < a; ++b)
      if (std::sqrt(norm2(sub(centers[a], centers[b]), d)) < 2.0 * radius)
        throw InvalidArgument("mass quantization: overlapping balls");
  }
  MassQuantization out;
  out.ball.assign(centers.size(), 0.0);
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point x = g.point(i);
    const double m = std::norm(v[i]);
    bool inside = false;
    for (std::size_t k = 0; k < centers.size() && !inside; ++k)
      if (norm2(sub(x, centers[k]), d) <= r2) {
        out.ball[k] += m;
        inside = true;
      }
    if (!inside) out.exterior += m;
  }
  for (double& b : out.ball) b *= g.cell_volume();
  out.exterior *= g.cell_volume();
  return out;
}

double error_budget(const BudgetInputs& in, const BudgetConstants& c) {
  const double s = in.T - in.t;
  if (!(s > 0.0)) throw InvalidArgument("budget: need t < T");
  double er = 0.0, msq = 0.0, mod = 0.0;
  for (std::size_t k = 0; k < in.params.bubbles.size(); ++k) {
    const BubbleParams& p = in.params.bubbles[k];
    const double l = p.lambda;
    const double mk = in.local_mass.at(k);
    er += std::abs((l * in.rates.bubbles.at(k).lambda + p.gamma) / std::pow(l, 4) * mk);
    msq += mk * mk;
  }
  for (double m : in.mod) mod += m;
  const double D = in.D;
  er += (mod / (s * s * s) + in.alpha_star * std::pow(s, in.m - 3.0 + 0.5 * in.dim) +
         std::pow(s, in.flatness - 3.0)) * D;
  er += D * D / (s * s) + c.eps * D * D / (s * s * s) + msq / (s * s * s);
  er += std::exp(-c.delta / s);
  return er;
}

double lower_bound_budget(const BudgetInputs& in, const BudgetConstants& c) {
  const double s = in.T - in.t;
  double msq = 0.0;
  for (double m : in.local_mass) msq += m * m;
  return c.CM * (msq / (s * s) + std::exp(-c.delta / s));
}

}  // namespace bwlab
