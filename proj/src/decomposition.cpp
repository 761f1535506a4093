#include "bwlab/decomposition.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace bwlab {

double localizer_ramp(double s, double sigma) {
  const double u = (s - 4.0 * sigma) / (4.0 * sigma);
  if (u <= 0.0) return 1.0;
  if (u >= 1.0) return 0.0;
  return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

LocalizerSet build_localizers(const std::vector<Point>& singularities, const GridPtr& grid,
                              std::uint64_t seed) {
  const int d = grid->dim();
  const int K = static_cast<int>(singularities.size());
  if (K < 1) throw InvalidArgument("localizers: need at least one singularity");
  LocalizerSet loc;
  loc.order.resize(K);
  std::iota(loc.order.begin(), loc.order.end(), 0);
  if (K == 1) {
    ComplexField one(grid);
    for (std::size_t i = 0; i < one.size(); ++i) one[i] = 1.0;
    loc.phi.push_back(std::move(one));
    return loc;
  }

  auto min_gap = [&](const Point& v) {
    double g = std::numeric_limits<double>::infinity();
    for (int j = 0; j < K; ++j)
      for (int l = 0; l < j; ++l)
        g = std::min(g, std::abs(dot(sub(singularities[j], singularities[l]), v, d)));
    return g;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  Point v{1.0, 0.0};
  bool ok = min_gap(v) > 1e-9;
  for (int attempt = 0; !ok && d == 2 && attempt < 100; ++attempt) {
    const double a = angle(rng);
    v = {std::cos(a), std::sin(a)};
    ok = min_gap(v) > 1e-9;
  }
  if (!ok) throw InvalidArgument("localizers: no admissible ordering direction");
  loc.direction = v;
  std::sort(loc.order.begin(), loc.order.end(), [&](int a, int b) {
    return dot(singularities[a], v, d) < dot(singularities[b], v, d);
  });
  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < K; ++k)
    gap = std::min(gap, dot(sub(singularities[loc.order[k + 1]], singularities[loc.order[k]]), v, d));
  loc.sigma = gap / 12.0;

  // Phi(x - x_k) for the ordered singularities.
  std::vector<std::vector<double>> ramp(K, std::vector<double>(grid->size()));
  for (int k = 0; k < K; ++k)
    for (std::size_t i = 0; i < grid->size(); ++i)
      ramp[k][i] = localizer_ramp(dot(sub(grid->point(i), singularities[loc.order[k]]), v, d),
                                  loc.sigma);
  loc.phi.assign(K, ComplexField(grid));
  for (int k = 0; k < K; ++k) {
    ComplexField& f = loc.phi[loc.order[k]];
    for (std::size_t i = 0; i < grid->size(); ++i) {
      double val;
      if (k == 0) {
        val = ramp[0][i];
      } else if (k == K - 1) {
        val = 1.0 - ramp[K - 2][i];
      } else {
        val = ramp[k][i] - ramp[k - 1][i];
      }
      f[i] = val;
    }
  }
  // The ramp derivative is at most 15/8 per 4 sigma; each Phi_k has two ramps.
  loc.gradient_constant = 2.0 * 15.0 / 32.0;
  return loc;
}

ComplexField remainder(const ComplexField& v, const ComplexField& z, const ModulationState& p,
                       const GroundStateTable& gs) {
  ComplexField R = v;
  R -= z;
  R -= eval_modulated_sum(p, gs, v.grid_ptr());
  return R;
}

std::vector<double> orthogonality_residuals(const ComplexField& R, const ModulatedProfile& prof,
                                            const GroundStateTable& gs) {
  const double qn = std::sqrt(gs.mass_q);
  std::vector<double> out;
  auto push = [&](const ComplexField& w, bool imag) {
    const cplx c = inner_product(w, R);
    const double scale = l2_norm(w) * qn;
    out.push_back((imag ? c.imag() : c.real()) / (scale > 0.0 ? scale : 1.0));
  };
  for (const auto& b : prof.bubbles) {
    for (const auto& f : b.xu) push(f, false);
    push(b.r2u, false);
    for (const auto& f : b.grad_u) push(f, true);
    push(b.lambda_u, true);
    push(b.rho, true);
  }
  return out;
}

double remainder_size(const ComplexField& R, double T, double t) {
  return l2_norm(R) + (T - t) * gradient_norm(R);
}

std::vector<double> localized_mass(const ComplexField& R, const ModulatedProfile& prof,
                                   const LocalizerSet& loc) {
  std::vector<double> out;
  const double dv = R.grid().cell_volume();
  for (std::size_t k = 0; k < prof.bubbles.size(); ++k) {
    const ComplexField& phi = loc.phi.at(k);
    double cross = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) {
      const double p = phi[i].real();
      cross += (R[i] * p * std::conj(prof.bubbles[k].u[i])).real();
      quad += std::norm(R[i]) * p;
    }
    out.push_back((2.0 * cross + quad) * dv);
  }
  return out;
}

namespace {

// Natural scale of each packed parameter for the finite-difference step.
std::vector<double> parameter_scales(const ModulationState& s, int dim) {
  std::vector<double> out;
  for (const auto& b : s.bubbles) {
    out.push_back(b.lambda);
    for (int j = 0; j < dim; ++j) out.push_back(b.lambda);
    for (int j = 0; j < 2 * dim + 2 - dim; ++j) out.push_back(1.0);
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

DecompositionRow fit_parameters(const ComplexField& v, const ComplexField& z,
                                const ModulationState& guess, const GroundStateTable& gs,
                                const LocalizerSet& loc, double T, const FitOptions& opt) {
  require_same_grid(v, z);
  if (!gs.has_rho) throw InvalidArgument("fit: the ground-state table has no rho");
  const GridPtr& grid = v.grid_ptr();
  const int d = grid->dim();
  const double t = guess.t;
  ComplexField base = v;
  base -= z;

  auto residual = [&](const std::vector<double>& p) {
    const ModulationState s = unpack(p, d, t);
    const ModulatedProfile prof = eval_modulated(s, gs, grid, true);
    ComplexField R = base;
    R -= prof.sum;
    return orthogonality_residuals(R, prof, gs);
  };

  std::vector<double> p = pack(guess, d);
  const std::size_t n = p.size();
  std::vector<double> F;
  int it = 0;
  bool singular = false;
  try {
    F = residual(p);
    for (; it < opt.max_iterations; ++it) {
      const double fnorm = max_abs(F);
      if (fnorm < 1e-3 * opt.tolerance) break;
      const auto scales = parameter_scales(unpack(p, d, t), d);
      Eigen::MatrixXd J(n, n);
      for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> q = p;
        const double h = opt.relative_step * scales[c];
        q[c] += h;
        const auto Fq = residual(q);
        for (std::size_t r = 0; r < n; ++r) J(r, c) = (Fq[r] - F[r]) / h;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
      lu.setThreshold(1e-12);
      if (lu.rank() < static_cast<Eigen::Index>(n)) {
        singular = true;
        break;
      }
      Eigen::VectorXd rhs(n);
      for (std::size_t r = 0; r < n; ++r) rhs(r) = -F[r];
      const Eigen::VectorXd delta = lu.solve(rhs);

      // Damped line search on the max-norm residual.
      double step = 1.0;
      bool accepted = false;
      std::vector<double> best_p = p, best_F = F;
      for (int ls = 0; ls < 12; ++ls, step *= 0.5) {
        std::vector<double> q = p;
        for (std::size_t c = 0; c < n; ++c) q[c] += step * delta(c);
        if (!(unpack(q, d, t).bubbles.front().lambda > 0.0)) continue;
        bool positive = true;
        for (const auto& b : unpack(q, d, t).bubbles) positive = positive && b.lambda > 0.0;
        if (!positive) continue;
        std::vector<double> Fq;
        try {
          Fq = residual(q);
        } catch (const ResolutionError&) {
          continue;
        }
        if (max_abs(Fq) < fnorm) {
          best_p = std::move(q);
          best_F = std::move(Fq);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      double rel = 0.0;
      for (std::size_t c = 0; c < n; ++c)
        rel = std::max(rel, std::abs(best_p[c] - p[c]) / scales[c]);
      p = std::move(best_p);
      F = std::move(best_F);
      if (rel < 1e-14) {
        ++it;
        break;
      }
    }
  } catch (const ResolutionError&) {
    singular = true;
  }

  DecompositionRow row;
  row.t = t;
  row.params = unpack(p, d, t);
  row.iterations = it;
  if (F.empty()) {
    row.converged = false;
    row.residual_max = std::numeric_limits<double>::infinity();
    return row;
  }
  row.residuals = F;
  row.residual_max = max_abs(F);
  row.converged = !singular && row.residual_max < opt.tolerance;
  const ModulatedProfile prof = eval_modulated(row.params, gs, grid, true);
  ComplexField R = base;
  R -= prof.sum;
  row.D = remainder_size(R, T, t);
  row.local_mass = localized_mass(R, prof, loc);
  return row;
}

namespace {

// Three-point derivative at t[i] from samples (nonuniform spacing).
double three_point(const std::vector<double>& t, const std::vector<double>& y, std::size_t i) {
  const std::size_t n = t.size();
  std::size_t a, b, c;
  if (i == 0) {
    a = 0, b = 1, c = 2;
  } else if (i == n - 1) {
    a = n - 3, b = n - 2, c = n - 1;
  } else {
    a = i - 1, b = i, c = i + 1;
  }
  const double x = t[i];
  const double ta = t[a], tb = t[b], tc = t[c];
  const double la = (2 * x - tb - tc) / ((ta - tb) * (ta - tc));
  const double lb = (2 * x - ta - tc) / ((tb - ta) * (tb - tc));
  const double lc = (2 * x - ta - tb) / ((tc - ta) * (tc - tb));
  return la * y[a] + lb * y[b] + lc * y[c];
}

}  // namespace

std::vector<ModulationState> parameter_rates(const std::vector<DecompositionRow>& rows) {
  if (rows.size() < 3) throw InvalidArgument("parameter rates: need at least 3 rows");
  for (const auto& r : rows)
    if (!r.converged) throw InvalidArgument("parameter rates: unconverged row inside the stencil");
  // Work in increasing time.
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rows[a].t < rows[b].t; });
  const std::size_t K = rows.front().params.bubbles.size();
  const std::size_t n = rows.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = rows[idx[i]].t;

  std::vector<ModulationState> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[idx[i]].t = t[i];
    out[idx[i]].bubbles.resize(K);
  }
  for (std::size_t k = 0; k < K; ++k) {
    auto series = [&](auto get) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = get(rows[idx[i]].params.bubbles[k]);
      return y;
    };
    auto lam = series([](const BubbleParams& b) { return b.lambda; });
    auto a0 = series([](const BubbleParams& b) { return b.alpha[0]; });
    auto a1 = series([](const BubbleParams& b) { return b.alpha[1]; });
    auto b0 = series([](const BubbleParams& b) { return b.beta[0]; });
    auto b1 = series([](const BubbleParams& b) { return b.beta[1]; });
    auto gam = series([](const BubbleParams& b) { return b.gamma; });
    auto th = series([](const BubbleParams& b) { return b.theta; });
    for (std::size_t i = 1; i < n; ++i) {
      while (th[i] - th[i - 1] > kPi) th[i] -= 2.0 * kPi;
      while (th[i] - th[i - 1] < -kPi) th[i] += 2.0 * kPi;
    }
    for (std::size_t i = 0; i < n; ++i) {
      BubbleParams& r = out[idx[i]].bubbles[k];
      r.lambda = three_point(t, lam, i);
      r.alpha = {three_point(t, a0, i), three_point(t, a1, i)};
      r.beta = {three_point(t, b0, i), three_point(t, b1, i)};
      r.gamma = three_point(t, gam, i);
      r.theta = three_point(t, th, i);
    }
  }
  return out;
}

std::vector<double> modulation_from_rates(const ModulationState& p, const ModulationState& rate,
                                          int dim) {
  std::vector<double> out;
  for (std::size_t k = 0; k < p.bubbles.size(); ++k) {
    const BubbleParams& b = p.bubbles[k];
    const BubbleParams& r = rate.bubbles[k];
    const double l = b.lambda, l2 = l * l;
    double m = std::abs(l * r.lambda + b.gamma) + std::abs(l2 * r.gamma + b.gamma * b.gamma);
    double s1 = 0.0, s2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double e1 = l * r.alpha[j] - 2.0 * b.beta[j];
      const double e2 = l2 * r.beta[j] + b.gamma * b.beta[j];
      s1 += e1 * e1;
      s2 += e2 * e2;
    }
    m += std::sqrt(s1) + std::sqrt(s2);
    m += std::abs(l2 * r.theta - 1.0 - norm2(b.beta, dim));
    out.push_back(m);
  }
  return out;
}

void modulation_vector(std::vector<DecompositionRow>& rows, int dim) {
  const auto rates = parameter_rates(rows);
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i].mod = modulation_from_rates(rows[i].params, rates[i], dim);
}

ComplexField renormalize(const ComplexField& Rk, const BubbleParams& p) {
  const Grid& g = Rk.grid();
  const GridPtr ygrid = make_grid(g.dim(), g.half_width() / p.lambda, g.n());
  ComplexField eps = fourier_resample(Rk, p.lambda, p.alpha, ygrid, true);
  eps *= std::pow(p.lambda, 0.5 * g.dim()) * std::polar(1.0, -p.theta);
  return eps;
}

double scal_renormalized(const ComplexField& eps, const GroundStateTable& gs) {
  return scal(eps, null_space_fields(gs, eps.grid_ptr()));
}

}  // namespace bwlab
