#include "bwlab/groundstate.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <fstream>
#include <limits>
#include <random>

#include "bwlab/hermite.hpp"
#include "json.hpp"

namespace bwlab {

namespace {

// Sixth-order central stencils on offsets -3..3.
constexpr std::array<double, 7> kSecond = {2, -27, 270, -490, 270, -27, 2};  // / 180 h^2
constexpr std::array<double, 7> kFirst = {-1, 9, -45, 0, 45, -9, 1};        // / 60 h

double nonlinear_power(int dim) { return 1.0 + 4.0 / dim; }

// Tail multiplier for ghost values beyond r_M: the decaying solution of
// f'' + (d-1)/r f' = f, to leading order.
double tail_factor(int dim, double r_m, double dr) {
  return std::exp(-dr) * std::pow(r_m / (r_m + dr), 0.5 * (dim - 1));
}

enum class Ghost { zero, tail };

// Contribution of index j (possibly negative or beyond M) expressed on the
// unknowns: even mirror at r = 0, ghost rule beyond M.
struct Term {
  int col;
  double coef;
};

bool resolve(int j, int M, double h, int dim, Ghost ghost, Term& out) {
  if (j < 0) j = -j;
  if (j <= M) {
    out = {j, 1.0};
    return true;
  }
  if (ghost == Ghost::zero) return false;
  out = {M, tail_factor(dim, M * h, (j - M) * h)};
  return true;
}

// Rows of the radial Laplacian as sparse triplets.
std::vector<Eigen::Triplet<double>> laplacian_triplets(int M, double h, int dim, Ghost ghost) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(std::size_t(M + 1) * 14);
  const double s2 = 1.0 / (180.0 * h * h);
  const double s1 = 1.0 / (60.0 * h);
  for (int i = 0; i <= M; ++i) {
    for (int o = -3; o <= 3; ++o) {
      Term t{};
      if (!resolve(i + o, M, h, dim, ghost, t)) continue;
      double w;
      if (i == 0) {
        w = dim * kSecond[o + 3] * s2;
      } else {
        w = kSecond[o + 3] * s2 + (dim - 1) / (i * h) * kFirst[o + 3] * s1;
      }
      if (w != 0.0) trip.emplace_back(i, t.col, w * t.coef);
    }
  }
  return trip;
}

std::vector<double> apply_stencil(const std::vector<double>& f, int dim, double h, Ghost ghost,
                                  bool first_derivative) {
  const int M = static_cast<int>(f.size()) - 1;
  std::vector<double> out(f.size(), 0.0);
  const double s2 = 1.0 / (180.0 * h * h);
  const double s1 = 1.0 / (60.0 * h);
  for (int i = 0; i <= M; ++i) {
    double acc = 0.0;
    for (int o = -3; o <= 3; ++o) {
      Term t{};
      if (!resolve(i + o, M, h, dim, ghost, t)) continue;
      double w;
      if (first_derivative) {
        // The mirror makes f even, so f'(0) = 0 falls out of the stencil.
        w = kFirst[o + 3] * s1;
      } else if (i == 0) {
        w = dim * kSecond[o + 3] * s2;
      } else {
        w = kSecond[o + 3] * s2 + (dim - 1) / (i * h) * kFirst[o + 3] * s1;
      }
      acc += w * t.coef * f[t.col];
    }
    out[i] = acc;
  }
  return out;
}

// Composite Simpson on r_i = i h, i = 0..M (M even) of f(r) * weight(r).
template <class W>
double simpson(const std::vector<double>& f, double h, W weight) {
  const int M = static_cast<int>(f.size()) - 1;
  double s = f[0] * weight(0.0) + f[M] * weight(M * h);
  for (int i = 1; i < M; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i] * weight(i * h);
  return s * h / 3.0;
}

void fill_constants(GroundStateTable& gs) {
  std::vector<double> q2(gs.q.size());
  for (std::size_t i = 0; i < q2.size(); ++i) q2[i] = gs.q[i] * gs.q[i];
  gs.q0 = gs.q[0];
  if (gs.dim == 1) {
    gs.mass_q = 2.0 * simpson(q2, gs.h, [](double) { return 1.0; });
    gs.yq2 = 2.0 * simpson(q2, gs.h, [](double r) { return r * r; });
  } else {
    gs.mass_q = 2.0 * kPi * simpson(q2, gs.h, [](double r) { return r; });
    gs.yq2 = 2.0 * kPi * simpson(q2, gs.h, [](double r) { return r * r * r; });
  }
}

void check_table_shape(int dim, double r_max, int samples) {
  if (dim != 1 && dim != 2) throw InvalidArgument("ground state: dimension must be 1 or 2");
  if (!(r_max > 0.0)) throw InvalidArgument("ground state: r_max must be positive");
  if (samples < 8 || samples % 2 != 0)
    throw InvalidArgument("ground state: sample count must be even and >= 8");
}

void validate_profile(const GroundStateTable& gs) {
  for (int i = 0; i <= gs.samples; ++i) {
    if (!(gs.q[i] > 0.0))
      throw ConvergenceError("ground state: profile not positive at r = " +
                             std::to_string(i * gs.h));
    if (i > 0 && !(gs.q[i] < gs.q[i - 1]))
      throw ConvergenceError("ground state: profile not decreasing at r = " +
                             std::to_string(i * gs.h));
  }
}

// Second derivative from the ODE, given Q and Q'.
void second_from_equation(GroundStateTable& gs) {
  const double p = nonlinear_power(gs.dim);
  gs.d2q.resize(gs.q.size());
  for (int i = 0; i <= gs.samples; ++i) {
    const double rhs = gs.q[i] - std::pow(gs.q[i], p);
    gs.d2q[i] = i == 0 ? rhs / gs.dim : rhs - (gs.dim - 1) / (i * gs.h) * gs.dq[i];
  }
}

}  // namespace

std::vector<double> radial_laplacian(const std::vector<double>& f, int dim, double h) {
  return apply_stencil(f, dim, h, Ghost::zero, false);
}

void GroundStateTable::prepare() {
  const std::size_t n = q.size();
  lq_.resize(n);
  dlq_.resize(n);
  d2lq_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    lq_[i] = std::log(q[i]);
    dlq_[i] = dq[i] / q[i];
    d2lq_[i] = d2q[i] / q[i] - dlq_[i] * dlq_[i];
  }
}

RadialSample GroundStateTable::ground(double r) const {
  r = std::abs(r);
  const int M = samples;
  if (r >= M * h) {
    const double rm = M * h;
    const double lr = lq_[M] - (r - rm) - 0.5 * (dim - 1) * std::log(r / rm);
    const double v = std::exp(lr);
    return {v, v * (-1.0 - 0.5 * (dim - 1) / r)};
  }
  const int i = std::min(static_cast<int>(r / h), M - 1);
  const Jet j = quintic_hermite(i * h, (i + 1) * h, {lq_[i], dlq_[i], d2lq_[i]},
                                {lq_[i + 1], dlq_[i + 1], d2lq_[i + 1]}, r);
  const double v = std::exp(j.f);
  return {v, v * j.df};
}

RadialSample GroundStateTable::profile_rho(double r) const {
  if (!has_rho) throw Error("ground state: rho has not been solved");
  r = std::abs(r);
  const int M = samples;
  if (r >= M * h) return {0.0, 0.0};
  const int i = std::min(static_cast<int>(r / h), M - 1);
  const Jet j = quintic_hermite(i * h, (i + 1) * h, {rho[i], drho[i], d2rho[i]},
                                {rho[i + 1], drho[i + 1], d2rho[i + 1]}, r);
  return {j.f, j.df};
}

double GroundStateTable::potential(double r) const {
  const double v = ground(r).value;
  return dim == 1 ? (v * v) * (v * v) : v * v;
}

double GroundStateTable::equation_residual() const {
  const auto lap = apply_stencil(q, dim, h, Ghost::tail, false);
  const double p = nonlinear_power(dim);
  double m = 0.0;
  for (int i = 0; i <= samples; ++i) m = std::max(m, std::abs(lap[i] - q[i] + std::pow(q[i], p)));
  return m;
}

double GroundStateTable::rho_residual() const {
  if (!has_rho) throw Error("ground state: rho has not been solved");
  const auto lp = apply_linearized_radial(Linearized::plus, *this, rho);
  double m = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double r = i * h;
    m = std::max(m, std::abs(lp[i] + r * r * q[i]));
  }
  return m;
}

double shoot_initial_value(int dim, double h, double r_stop, double lo, double hi) {
  const double p = nonlinear_power(dim);
  // +1: crosses zero (too large); -1: turns back up (too small); 0: undecided.
  auto classify = [&](double a) {
    double r = h;
    const double c = (a - std::pow(a, p)) / dim;
    double y0 = a + 0.5 * c * h * h;
    double y1 = c * h;
    auto rhs = [&](double rr, double q, double dq, double& dq_out, double& d2q_out) {
      dq_out = dq;
      d2q_out = -(dim - 1) / rr * dq + q - std::copysign(std::pow(std::abs(q), p), q);
    };
    while (r < r_stop) {
      double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
      rhs(r, y0, y1, k1a, k1b);
      rhs(r + 0.5 * h, y0 + 0.5 * h * k1a, y1 + 0.5 * h * k1b, k2a, k2b);
      rhs(r + 0.5 * h, y0 + 0.5 * h * k2a, y1 + 0.5 * h * k2b, k3a, k3b);
      rhs(r + h, y0 + h * k3a, y1 + h * k3b, k4a, k4b);
      y0 += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
      y1 += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
      r += h;
      if (y0 < 0.0) return 1;
      if (y1 > 0.0) return -1;
    }
    return 0;
  };
  if (classify(lo) != -1 || classify(hi) != 1)
    throw ConvergenceError("ground state: shooting bracket [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "] does not bracket the ground state");
  for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const int c = classify(mid);
    if (c == 1) {
      hi = mid;
    } else if (c == -1) {
      lo = mid;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

GroundStateTable shoot_ground_state(int dim, double r_max, int samples) {
  check_table_shape(dim, r_max, samples);
  GroundStateTable gs;
  gs.dim = dim;
  gs.r_max = r_max;
  gs.samples = samples;
  gs.h = r_max / samples;
  const int M = samples;
  const double h = gs.h;
  const double p = nonlinear_power(dim);

  const double a = shoot_initial_value(dim, h, r_max, 1.05, 4.0);

  // Trajectory of the converged shot, kept while it is trustworthy; the
  // exponential tail replaces it afterwards.
  std::vector<double> guess(M + 1, 0.0);
  guess[0] = a;
  {
    const double c = (a - std::pow(a, p)) / dim;
    double y0 = a + 0.5 * c * h * h;
    double y1 = c * h;
    guess[1] = y0;
    int cut = M;
    for (int i = 1; i < M; ++i) {
      const double r = i * h;
      auto f = [&](double rr, double q, double dq) {
        return -(dim - 1) / rr * dq + q - std::copysign(std::pow(std::abs(q), p), q);
      };
      const double k1a = y1, k1b = f(r, y0, y1);
      const double k2a = y1 + 0.5 * h * k1b, k2b = f(r + 0.5 * h, y0 + 0.5 * h * k1a, k2a);
      const double k3a = y1 + 0.5 * h * k2b, k3b = f(r + 0.5 * h, y0 + 0.5 * h * k2a, k3a);
      const double k4a = y1 + h * k3b, k4b = f(r + h, y0 + h * k3a, k4a);
      y0 += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
      y1 += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
      guess[i + 1] = y0;
      if (y0 < 1e-6 * a || y1 > 0.0) {
        cut = i + 1;
        break;
      }
    }
    for (int i = cut + 1; i <= M; ++i)
      guess[i] = guess[cut] * tail_factor(dim, cut * h, (i - cut) * h);
  }

  // Newton on the discretized equation with the tail rule as outer boundary.
  using SpMat = Eigen::SparseMatrix<double>;
  const auto lap_trip = laplacian_triplets(M, h, dim, Ghost::tail);
  SpMat lap(M + 1, M + 1);
  lap.setFromTriplets(lap_trip.begin(), lap_trip.end());
  Eigen::VectorXd qv = Eigen::Map<Eigen::VectorXd>(guess.data(), M + 1);
  // Rounding floor of the second-difference stencil.
  const double floor = 100.0 * std::numeric_limits<double>::epsilon() * 3.0 / (h * h);
  bool converged = false;
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd F = lap * qv;
    SpMat J = lap;
    for (int i = 0; i <= M; ++i) {
      F(i) += -qv(i) + std::copysign(std::pow(std::abs(qv(i)), p), qv(i));
      J.coeffRef(i, i) += -1.0 + p * std::pow(std::abs(qv(i)), p - 1.0);
    }
    if (F.cwiseAbs().maxCoeff() < floor) {
      converged = true;
      break;
    }
    Eigen::SparseLU<SpMat> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw ConvergenceError("ground state: singular Newton system");
    const Eigen::VectorXd delta = lu.solve(-F);
    qv += delta;
    if (delta.cwiseAbs().maxCoeff() < 1e-14 * a) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("ground state: Newton refinement did not converge");

  gs.q.assign(qv.data(), qv.data() + M + 1);
  gs.dq = apply_stencil(gs.q, dim, h, Ghost::tail, true);
  second_from_equation(gs);
  validate_profile(gs);
  fill_constants(gs);
  gs.prepare();
  if (gs.equation_residual() > 2.0 * floor)
    throw ConvergenceError("ground state: residual exceeds tolerance");
  return gs;
}

GroundStateTable solve_ground_state(int dim, double r_max, int samples) {
  check_table_shape(dim, r_max, samples);
  if (dim == 2) return shoot_ground_state(dim, r_max, samples);

  GroundStateTable gs;
  gs.dim = 1;
  gs.r_max = r_max;
  gs.samples = samples;
  gs.h = r_max / samples;
  const int M = samples;
  gs.q.resize(M + 1);
  gs.dq.resize(M + 1);
  gs.d2q.resize(M + 1);
  const double amp = std::pow(3.0, 0.25);
  for (int i = 0; i <= M; ++i) {
    const double r = i * gs.h;
    const double e = std::exp(-4.0 * r);
    const double sech = 2.0 * std::exp(-2.0 * r) / (1.0 + e);
    const double th = (1.0 - e) / (1.0 + e);
    const double v = amp * std::sqrt(sech);
    // log Q = log A + 1/2 log sech(2r): (log Q)' = -tanh 2r, (log Q)'' = -2 sech^2 2r.
    const double l1 = -th;
    const double l2 = -2.0 * sech * sech;
    gs.q[i] = v;
    gs.dq[i] = v * l1;
    gs.d2q[i] = v * (l2 + l1 * l1);
  }
  validate_profile(gs);
  fill_constants(gs);
  gs.prepare();
  if (gs.equation_residual() > 1e-9)
    throw ConvergenceError("ground state: residual exceeds tolerance");
  return gs;
}

std::vector<double> apply_linearized_radial(Linearized which, const GroundStateTable& gs,
                                            const std::vector<double>& f) {
  const auto lap = radial_laplacian(f, gs.dim, gs.h);
  const double c = which == Linearized::plus ? nonlinear_power(gs.dim) : 1.0;
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    out[i] = -lap[i] + f[i] - c * std::pow(gs.q[i], 4.0 / gs.dim) * f[i];
  return out;
}

GroundStateTable solve_rho(GroundStateTable gs) {
  const int M = gs.samples;
  const double h = gs.h;
  const double p = nonlinear_power(gs.dim);
  using SpMat = Eigen::SparseMatrix<double>;
  auto trip = laplacian_triplets(M, h, gs.dim, Ghost::zero);
  for (auto& t : trip) t = Eigen::Triplet<double>(t.row(), t.col(), -t.value());
  for (int i = 0; i <= M; ++i)
    trip.emplace_back(i, i, 1.0 - p * std::pow(gs.q[i], p - 1.0));
  SpMat A(M + 1, M + 1);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd b(M + 1);
  for (int i = 0; i <= M; ++i) b(i) = -(i * h) * (i * h) * gs.q[i];
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw ConvergenceError("rho: singular linear system");
  const Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw ConvergenceError("rho: linear solve failed");
  gs.rho.assign(x.data(), x.data() + M + 1);
  gs.drho = apply_stencil(gs.rho, gs.dim, h, Ghost::zero, true);
  gs.d2rho.resize(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double r = i * h;
    const double lap = gs.rho[i] - p * std::pow(gs.q[i], p - 1.0) * gs.rho[i] + r * r * gs.q[i];
    gs.d2rho[i] = i == 0 ? lap / gs.dim : lap - (gs.dim - 1) / r * gs.drho[i];
  }
  gs.has_rho = true;
  if (gs.rho_residual() > 1e-8) throw ConvergenceError("rho: residual exceeds tolerance");
  return gs;
}

ComplexField apply_linearized(Linearized which, const GroundStateTable& gs, const ComplexField& f) {
  const Grid& g = f.grid();
  if (g.dim() != gs.dim) throw InvalidArgument("linearized operator: dimension mismatch");
  const double c = which == Linearized::plus ? nonlinear_power(gs.dim) : 1.0;
  ComplexField out = spectral_laplacian(f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = std::sqrt(norm2(g.point(i), g.dim()));
    out[i] = -out[i] + f[i] - c * gs.potential(r) * f[i];
  }
  return out;
}

NullSpaceFields null_space_fields(const GroundStateTable& gs, const GridPtr& grid) {
  const int d = grid->dim();
  if (d != gs.dim) throw InvalidArgument("null space: dimension mismatch");
  NullSpaceFields ns{ComplexField(grid), {}, ComplexField(grid), {}, ComplexField(grid),
                     ComplexField(grid)};
  for (int j = 0; j < d; ++j) {
    ns.xq.emplace_back(grid);
    ns.grad_q.emplace_back(grid);
  }
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const Point x = grid->point(i);
    const double r = std::sqrt(norm2(x, d));
    const RadialSample s = gs.ground(r);
    ns.q[i] = s.value;
    ns.r2q[i] = r * r * s.value;
    ns.lambda_q[i] = 0.5 * d * s.value + r * s.derivative;
    for (int j = 0; j < d; ++j) {
      ns.xq[j][i] = x[j] * s.value;
      ns.grad_q[j][i] = r > 0.0 ? s.derivative * x[j] / r : 0.0;
    }
    if (gs.has_rho) ns.rho[i] = gs.profile_rho(r).value;
  }
  return ns;
}

double KernelReport::max() const {
  return std::max({lplus_grad_q, lplus_lambda_q, lplus_rho, lminus_q, lminus_xq, lminus_r2q});
}

KernelReport check_kernel_identities(const GroundStateTable& gs, const GridPtr& grid) {
  const auto ns = null_space_fields(gs, grid);
  auto maxdiff = [](const ComplexField& a, const ComplexField& b, double cb) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - cb * b[i]));
    return m;
  };
  KernelReport rep;
  for (std::size_t j = 0; j < ns.grad_q.size(); ++j) {
    rep.lplus_grad_q = std::max(
        rep.lplus_grad_q, apply_linearized(Linearized::plus, gs, ns.grad_q[j]).max_abs());
    rep.lminus_xq = std::max(rep.lminus_xq, maxdiff(apply_linearized(Linearized::minus, gs, ns.xq[j]),
                                                    ns.grad_q[j], -2.0));
  }
  rep.lplus_lambda_q = maxdiff(apply_linearized(Linearized::plus, gs, ns.lambda_q), ns.q, -2.0);
  if (gs.has_rho)
    rep.lplus_rho = maxdiff(apply_linearized(Linearized::plus, gs, ns.rho), ns.r2q, -1.0);
  else
    rep.lplus_rho = std::numeric_limits<double>::infinity();
  rep.lminus_q = apply_linearized(Linearized::minus, gs, ns.q).max_abs();
  rep.lminus_r2q = maxdiff(apply_linearized(Linearized::minus, gs, ns.r2q), ns.lambda_q, -4.0);
  return rep;
}

double localized_cutoff(double r, double scale) {
  const double s = std::abs(r) / scale;
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return std::exp(-s);
  return std::exp(quintic_hermite(1.0, 2.0, {0.0, 0.0, 0.0}, {-2.0, -1.0, 0.0}, s).f);
}

namespace {

double real_pair(const ComplexField& f, const ComplexField& dir, bool imag_part) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    s += (imag_part ? f[i].imag() : f[i].real()) * dir[i].real();
  return s * f.grid().cell_volume();
}

std::vector<const ComplexField*> real_directions(const NullSpaceFields& ns) {
  std::vector<const ComplexField*> v{&ns.q};
  for (const auto& f : ns.xq) v.push_back(&f);
  v.push_back(&ns.r2q);
  return v;
}

std::vector<const ComplexField*> imag_directions(const NullSpaceFields& ns) {
  std::vector<const ComplexField*> v;
  for (const auto& f : ns.grad_q) v.push_back(&f);
  v.push_back(&ns.lambda_q);
  v.push_back(&ns.rho);
  return v;
}

}  // namespace

double scal(const ComplexField& f, const NullSpaceFields& ns) {
  double s = 0.0;
  for (const auto* dir : real_directions(ns)) {
    const double c = real_pair(f, *dir, false);
    s += c * c;
  }
  for (const auto* dir : imag_directions(ns)) {
    const double c = real_pair(f, *dir, true);
    s += c * c;
  }
  return s;
}

ComplexField orthogonalize_null_space(const ComplexField& f, const NullSpaceFields& ns) {
  ComplexField out = f;
  auto project = [&](const std::vector<const ComplexField*>& dirs, bool imag_part) {
    const int n = static_cast<int>(dirs.size());
    Eigen::MatrixXd G(n, n);
    Eigen::VectorXd b(n);
    for (int a = 0; a < n; ++a) {
      b(a) = real_pair(out, *dirs[a], imag_part);
      for (int c = 0; c < n; ++c) G(a, c) = real_pair(*dirs[a], *dirs[c], false);
    }
    const Eigen::VectorXd coef = G.ldlt().solve(b);
    for (std::size_t i = 0; i < out.size(); ++i) {
      double corr = 0.0;
      for (int a = 0; a < n; ++a) corr += coef(a) * (*dirs[a])[i].real();
      out[i] -= imag_part ? cplx(0.0, corr) : cplx(corr, 0.0);
    }
  };
  project(real_directions(ns), false);
  project(imag_directions(ns), true);
  return out;
}

CoercivityTerms coercivity_terms(const GroundStateTable& gs, const ComplexField& f, double scale) {
  const Grid& g = f.grid();
  const auto grad = spectral_gradient(f);
  const double c = nonlinear_power(gs.dim);
  CoercivityTerms t;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = std::sqrt(norm2(g.point(i), g.dim()));
    double w = std::norm(f[i]);
    for (const auto& gc : grad) w += std::norm(gc[i]);
    const double phi = localized_cutoff(r, scale);
    const double v = gs.potential(r);
    t.denominator += w * phi;
    t.numerator += w * phi - c * v * f[i].real() * f[i].real() - v * f[i].imag() * f[i].imag();
  }
  t.numerator *= g.cell_volume();
  t.denominator *= g.cell_volume();
  return t;
}

ComplexField random_test_function(const GridPtr& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> width(0.7, 2.5);
  std::uniform_real_distribution<double> center(-1.5, 1.5);
  std::uniform_real_distribution<double> wave(-2.5, 2.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = grid->dim();
  const double sigma = width(rng);
  const Point c{center(rng), d == 2 ? center(rng) : 0.0};
  struct Mode {
    Point k;
    cplx a;
  };
  std::vector<Mode> modes;
  for (int m = 0; m < 4; ++m) {
    Mode md;
    md.k = {wave(rng), d == 2 ? wave(rng) : 0.0};
    md.a = cplx(normal(rng), normal(rng));
    modes.push_back(md);
  }
  return ComplexField::from_function(grid, [&](const Point& x) {
    const double env = std::exp(-norm2(sub(x, c), d) / (2.0 * sigma * sigma));
    cplx s(0.0, 0.0);
    for (const auto& md : modes) s += md.a * std::polar(1.0, dot(md.k, x, d));
    return env * s;
  });
}

double coercivity_sample(const GroundStateTable& gs, const GridPtr& grid, double scale,
                         std::uint64_t seed) {
  const auto ns = null_space_fields(gs, grid);
  const auto f = orthogonalize_null_space(random_test_function(grid, seed), ns);
  const auto t = coercivity_terms(gs, f, scale);
  if (t.denominator < 1e-14) throw Error("coercivity: degenerate test function");
  return t.ratio();
}

EigenEstimate lowest_eigenvalue_plus(const GroundStateTable& gs, const GridPtr& grid,
                                     int max_iterations) {
  const int d = grid->dim();
  const double shift = -nonlinear_power(d) * std::pow(gs.q0, 4.0 / d) - 1.0;
  auto op = [&](const ComplexField& u) {
    ComplexField out = apply_linearized(Linearized::plus, gs, u);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= shift * u[i];
    return out;
  };
  auto precondition = [&](const ComplexField& u) {
    return apply_fourier_multiplier(
        u, [&](const Point& k) { return cplx(1.0 / (norm2(k, d) + 1.0 - shift), 0.0); });
  };
  auto dotr = [](const ComplexField& a, const ComplexField& b) { return real_inner(a, b); };

  // Start from a Gaussian, which overlaps the ground direction.
  ComplexField u = ComplexField::from_function(
      grid, [&](const Point& x) { return cplx(std::exp(-norm2(x, d)), 0.0); });
  u *= 1.0 / l2_norm(u);
  double lambda = 0.0, previous = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iterations; ++it) {
    // Solve (L+ - shift) w = u by preconditioned CG.
    ComplexField w(grid);
    ComplexField r = u;
    ComplexField z = precondition(r);
    ComplexField p = z;
    double rz = dotr(r, z);
    const double target = 1e-13 * std::sqrt(dotr(u, u));
    for (int k = 0; k < 500 && std::sqrt(dotr(r, r)) > target; ++k) {
      const ComplexField ap = op(p);
      const double alpha = rz / dotr(p, ap);
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      z = precondition(r);
      const double rz_new = dotr(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    u = w;
    u *= 1.0 / l2_norm(u);
    lambda = dotr(apply_linearized(Linearized::plus, gs, u), u);
    if (std::abs(lambda - previous) < 1e-12 * std::max(1.0, std::abs(lambda))) break;
    previous = lambda;
  }
  return {lambda, u, it + 1};
}

void write_ground_state(const std::filesystem::path& dir, const GroundStateTable& gs,
                        const GridPtr& grid) {
  std::filesystem::create_directories(dir);
  const auto ns = null_space_fields(gs, grid);
  write_snapshot(dir / "q.nlsf", ns.q, 0.0);
  if (gs.has_rho) write_snapshot(dir / "rho.nlsf", ns.rho, 0.0);
  {
    std::ofstream os(dir / "radial.csv");
    os.precision(17);
    os << "r,Q,dQ" << (gs.has_rho ? ",rho,drho" : "") << "\n";
    for (int i = 0; i <= gs.samples; ++i) {
      os << i * gs.h << "," << gs.q[i] << "," << gs.dq[i];
      if (gs.has_rho) os << "," << gs.rho[i] << "," << gs.drho[i];
      os << "\n";
    }
  }
  nlohmann::json j;
  j["Q0"] = gs.q0;
  j["massQ"] = gs.mass_q;
  j["yQ2"] = gs.yq2;
  j["d"] = gs.dim;
  j["r_max"] = gs.r_max;
  j["M"] = gs.samples;
  std::ofstream os(dir / "groundstate.json");
  os << j.dump(2) << "\n";
}

}  // namespace bwlab
