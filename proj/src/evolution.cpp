#include "bwlab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace bwlab {

namespace {

// exp(-i h |k|^2) on the Fourier grid, cached per (grid, h).
class Propagator {
 public:
  explicit Propagator(const Grid& g) : grid_(g), k2_(g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) k2_[i] = norm2(g.wavevector(i), g.dim());
  }

  // exp(h (i Delta + i omega)) f.
  ComplexField apply(const ComplexField& f, double h, double omega) {
    const auto& m = multiplier(h);
    const cplx shift = std::polar(1.0, h * omega);
    auto hat = fft_forward(grid_, f.values());
    for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= m[i] * shift;
    return ComplexField(f.grid_ptr(), fft_inverse(grid_, hat));
  }

 private:
  const std::vector<cplx>& multiplier(double h) {
    auto it = cache_.find(h);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 8) cache_.clear();
    std::vector<cplx> m(k2_.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::polar(1.0, -h * k2_[i]);
    return cache_.emplace(h, std::move(m)).first->second;
  }

  const Grid& grid_;
  std::vector<double> k2_;
  std::map<double, std::vector<cplx>> cache_;
};

Propagator& propagator_for(const GridPtr& g) {
  thread_local std::map<const Grid*, std::pair<GridPtr, std::unique_ptr<Propagator>>> table;
  auto it = table.find(g.get());
  if (it == table.end()) {
    if (table.size() > 8) table.clear();
    it = table.emplace(g.get(), std::make_pair(g, std::make_unique<Propagator>(*g))).first;
  }
  return *it->second.second;
}

// F(t, v) = i (a1 . grad v + a0 v + (|v|^{4/d} - omega) v).
ComplexField rhs(const ComplexField& v, const PerturbationModel& model, double t,
                 const StepOptions& opt, double omega) {
  const Grid& g = v.grid();
  const double p = 2.0 / g.dim();  // |v|^{4/d} = (|v|^2)^{2/d}
  ComplexField out(v.grid_ptr());
  if (opt.nonlinear) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double m2 = std::norm(v[i]);
      out[i] = (g.dim() == 1 ? m2 * m2 : std::pow(m2, p)) * v[i];
    }
  }
  if (omega != 0.0)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] -= omega * v[i];
  if (!model.is_free()) {
    const CoefficientSlice c = model.coefficients(t);
    const auto grad = spectral_gradient(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      cplx s = c.a0[i] * v[i];
      for (int j = 0; j < g.dim(); ++j) s += c.a1[j][i] * grad[j][i];
      out[i] += s;
    }
  }
  out *= cplx(0.0, 1.0);
  return out;
}

// a + s * b
ComplexField axpy(const ComplexField& a, double s, const ComplexField& b) {
  ComplexField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
  return out;
}

}  // namespace

EvolutionStats measure(const ComplexField& v, long steps) {
  EvolutionStats s;
  const Norms n = norms(v);
  s.mass = n.l2 * n.l2;
  s.h1 = n.h1;
  s.max_abs = v.max_abs();
  s.steps = steps;
  return s;
}

double nonlinear_frequency(const ComplexField& v) {
  const double e = 2.0 / v.grid().dim();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m2 = std::norm(v[i]);
    num += std::pow(m2, e) * m2;
    den += m2;
  }
  return den > 0.0 ? num / den : 0.0;
}

double step_cap(const ComplexField& v) {
  const double m = v.max_abs();
  return 0.1 / std::max(1.0, std::pow(m, 4.0 / v.grid().dim()));
}

EvolutionState step(const EvolutionState& s, const PerturbationModel& model, double h,
                    const StepOptions& opt) {
  const ComplexField& v = s.field;
  if (!(v.grid() == *model.grid())) throw InvalidArgument("step: grid mismatch with model");
  Propagator& E = propagator_for(v.grid_ptr());
  const double t = s.t;

  const double w = opt.nonlinear && opt.frequency_shift ? nonlinear_frequency(v) : 0.0;

  const ComplexField u_half = E.apply(v, 0.5 * h, w);
  const ComplexField k1 = rhs(v, model, t, opt, w);
  const ComplexField k1h = E.apply(k1, 0.5 * h, w);
  const ComplexField k2 = rhs(axpy(u_half, 0.5 * h, k1h), model, t + 0.5 * h, opt, w);
  const ComplexField k3 = rhs(axpy(u_half, 0.5 * h, k2), model, t + 0.5 * h, opt, w);
  const ComplexField k4 = rhs(E.apply(axpy(u_half, h, k3), 0.5 * h, w), model, t + h, opt, w);

  ComplexField acc = u_half;
  for (std::size_t i = 0; i < acc.size(); ++i)
    acc[i] += h / 6.0 * (k1h[i] + 2.0 * k2[i] + 2.0 * k3[i]);
  ComplexField next = E.apply(acc, 0.5 * h, w);
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += h / 6.0 * k4[i];

  if (!next.all_finite())
    throw BlowupError("step: non-finite field at t = " + std::to_string(t + h));
  EvolutionState out{std::move(next), t + h, s.stats};
  out.stats.steps = s.stats.steps + 1;
  return out;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::blowup: return "blowup";
    case Termination::underresolved: return "underresolved";
  }
  return "unknown";
}

IntegrateResult integrate(EvolutionState s, double t_end, const PerturbationModel& model,
                          const IntegrateOptions& opt, const SampleCallback& on_sample) {
  if (!(opt.dt > 0.0)) throw InvalidArgument("integrate: dt must be positive");
  const double t0 = s.t;
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  const double tol = 1e-12 * std::max(1.0, std::abs(t0) + std::abs(t_end));
  auto inside = [&](double t) { return dir * (t - t0) > tol && dir * (t_end - t) > tol; };

  std::vector<double> stops;
  for (double t : opt.sample_times)
    if (inside(t)) stops.push_back(t);
  if (opt.respect_path_nodes)
    for (const auto& p : model.paths())
      for (double t : p.nodes())
        if (inside(t)) stops.push_back(t);
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end(), [&](double a, double b) { return dir * a < dir * b; });
  stops.erase(std::unique(stops.begin(), stops.end(),
                          [&](double a, double b) { return std::abs(a - b) <= tol; }),
              stops.end());

  auto is_sample = [&](double t) {
    for (double u : opt.sample_times)
      if (std::abs(u - t) <= tol) return true;
    return false;
  };

  IntegrateResult res{s, Termination::completed, ""};
  auto fire = [&](EvolutionState& st) {
    if (!on_sample) return;
    st.stats = measure(st.field, st.stats.steps);
    on_sample(st);
  };
  if (is_sample(t0)) fire(res.state);
  const double dx = s.field.grid().dx();
  try {
    for (double target : stops) {
      const double rem = target - res.state.t;
      if (std::abs(rem) <= tol) continue;
      const double hmax = std::min(opt.dt, step_cap(res.state.field));
      const auto n = static_cast<long>(std::ceil(std::abs(rem) / hmax - 1e-9));
      const double h = rem / static_cast<double>(n);
      const double start = res.state.t;
      for (long i = 0; i < n; ++i) {
        res.state = step(res.state, model, h, opt.step);
        res.state.t = start + h * static_cast<double>(i + 1);
      }
      res.state.t = target;
      const double g = gradient_norm(res.state.field);
      if (g * dx > opt.step.guard)
        throw ResolutionError("integrate: ||grad v|| dx = " + std::to_string(g * dx) +
                              " exceeds the resolution guard at t = " + std::to_string(target));
      if (is_sample(target)) fire(res.state);
    }
  } catch (const BlowupError& e) {
    res.termination = Termination::blowup;
    res.message = e.what();
  } catch (const ResolutionError& e) {
    res.termination = Termination::underresolved;
    res.message = e.what();
  }
  res.state.stats = measure(res.state.field, res.state.stats.steps);
  return res;
}

TrajectoryRecord evolve_regular_profile(const ComplexField& z_star, const PerturbationModel& model,
                                        double T, double t_target, double dt,
                                        const std::vector<double>& sample_times) {
  if (!(t_target < T)) throw InvalidArgument("regular profile: need t_target < T");
  TrajectoryRecord rec;
  IntegrateOptions opt;
  opt.dt = dt;
  opt.sample_times = sample_times;
  opt.sample_times.push_back(T);
  EvolutionState s{z_star, T, {}};
  auto res = integrate(std::move(s), t_target, model, opt, [&](const EvolutionState& st) {
    if (std::find(rec.times.begin(), rec.times.end(), st.t) != rec.times.end()) return;
    rec.times.push_back(st.t);
    rec.stats.push_back(st.stats);
    rec.trajectory.add(st.t, st.field);
  });
  rec.termination = res.termination;
  rec.message = res.message;
  if (res.termination == Termination::blowup)
    throw BlowupError("regular profile blew up (alpha* too large?): " + res.message);
  return rec;
}

std::vector<ComparisonRow> compare_trajectories(const StoredTrajectory& a, const StoredTrajectory& b,
                                                const std::vector<double>& times) {
  auto find = [](const StoredTrajectory& tr, double t) -> long {
    const auto& ts = tr.times();
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (std::abs(ts[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return static_cast<long>(i);
    return -1;
  };
  std::vector<ComparisonRow> out;
  for (double t : times) {
    const long ia = find(a, t), ib = find(b, t);
    if (ia < 0 || ib < 0) continue;
    const ComplexField diff = a.field(ia) - b.field(ib);
    const Norms n = norms(diff);
    out.push_back({t, n.l2, n.h1});
  }
  if (out.empty()) throw InvalidArgument("compare_trajectories: no common sample times");
  return out;
}

}  // namespace bwlab
