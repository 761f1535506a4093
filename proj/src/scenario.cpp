#include "bwlab/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace bwlab {

using nlohmann::json;

std::vector<Point> Scenario::singularities() const {
  std::vector<Point> out;
  for (const auto& b : bubbles) out.push_back(b.x);
  return out;
}

double Scenario::schedule_time(int k) const {
  return T - schedule_base * std::pow(schedule_ratio, k);
}

std::vector<double> Scenario::schedule() const {
  std::vector<double> out;
  for (int k = 0; k <= n_max; ++k) out.push_back(schedule_time(k));
  return out;
}

double Scenario::kappa() const {
  return std::min(residue.m + 0.5 * dim - 1.0, noise.flatness - 2.0);
}

double Scenario::frequency_spread() const {
  if (bubbles.empty()) return 0.0;
  double lo = bubbles.front().w, hi = lo;
  for (const auto& b : bubbles) lo = std::min(lo, b.w), hi = std::max(hi, b.w);
  return 0.5 * (hi - lo);
}

double Scenario::inverse_separation() const {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < bubbles.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      gap = std::min(gap, std::sqrt(norm2(sub(bubbles[a].x, bubbles[b].x), dim)));
  return std::isinf(gap) ? 0.0 : 1.0 / gap;
}

std::vector<std::string> Scenario::warnings() const {
  std::vector<std::string> w;
  if (noise.count > 0 && noise.flatness < 5)
    w.push_back("noise.flatness = " + std::to_string(noise.flatness) + " < 5");
  const int m_min = dim == 1 ? 4 : 3;
  if (residue.m < m_min)
    w.push_back("residue.m = " + std::to_string(residue.m) + " < " + std::to_string(m_min) +
                " for d = " + std::to_string(dim));
  const double dx = 2.0 * half_width / n;
  double wmin = std::numeric_limits<double>::infinity();
  for (const auto& b : bubbles) wmin = std::min(wmin, b.w);
  if (!bubbles.empty() && wmin * (T - schedule_time(n_max)) < 8.0 * dx)
    w.push_back("min_k w_k (T - t_nmax) is below 8 dx: the last schedule times are unresolved");
  return w;
}

namespace {

json to_json(const Scenario& s) {
  json bubbles = json::array();
  for (const auto& b : s.bubbles) {
    json x = json::array();
    for (int j = 0; j < s.dim; ++j) x.push_back(b.x[j]);
    bubbles.push_back({{"x", x}, {"w", b.w}, {"phase", b.phase}});
  }
  return json{
      {"name", s.name},
      {"d", s.dim},
      {"bubbles", bubbles},
      {"T", s.T},
      {"t_star", s.t_star},
      {"grid", {{"L", s.half_width}, {"N", s.n}}},
      {"dt", s.dt},
      {"schedule", {{"base", s.schedule_base}, {"ratio", s.schedule_ratio}, {"n_max", s.n_max}}},
      {"samples_per_step", s.samples_per_step},
      {"noise",
       {{"count", s.noise.count},
        {"flatness", s.noise.flatness},
        {"amplitude", s.noise.amplitude},
        {"width", s.noise.width},
        {"node_spacing", s.noise.node_spacing},
        {"seed", s.noise.seed}}},
      {"residue", {{"m", s.residue.m}, {"alpha_star", s.residue.alpha_star}, {"width", s.residue.width}}},
      {"A", s.A},
      {"ball_radius", s.ball_radius},
      {"output", s.output},
  };
}

// Collects schema violations with their JSON paths.
class Reader {
 public:
  std::vector<std::string> errors;

  void keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
      errors.push_back(path + ": expected an object");
      return;
    }
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) errors.push_back(path + "/" + k + ": unknown key");
  }

  template <class T>
  void get(const json& obj, const std::string& key, const std::string& path, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string p = path + "/" + key;
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return fail(p, "expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) return fail(p, "expected a non-negative integer");
      out = v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return fail(p, "expected an integer");
      out = v.get<T>();
    } else {
      if (!v.is_number()) return fail(p, "expected a number");
      out = v.get<T>();
    }
  }

  void check(bool ok, const std::string& path, const std::string& what) {
    if (!ok) fail(path, what);
  }

 private:
  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }
};

Scenario from_json(const json& j) {
  Scenario s;
  s.bubbles.clear();
  Reader r;
  r.keys(j, "", {"name", "d", "bubbles", "T", "t_star", "grid", "dt", "schedule", "samples_per_step",
                 "noise", "residue", "A", "ball_radius", "output"});
  if (!r.errors.empty() && !j.is_object())
    throw InvalidArgument("scenario schema violations:\n  " + r.errors.front());
  r.get(j, "name", "", s.name);
  r.get(j, "d", "", s.dim);
  r.get(j, "T", "", s.T);
  r.get(j, "t_star", "", s.t_star);
  r.get(j, "dt", "", s.dt);
  r.get(j, "samples_per_step", "", s.samples_per_step);
  r.get(j, "A", "", s.A);
  r.get(j, "ball_radius", "", s.ball_radius);
  r.get(j, "output", "", s.output);
  r.check(s.dim == 1 || s.dim == 2, "/d", "must be 1 or 2");

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    r.keys(g, "/grid", {"L", "N"});
    r.get(g, "L", "/grid", s.half_width);
    r.get(g, "N", "/grid", s.n);
  }
  if (j.contains("schedule")) {
    const json& g = j.at("schedule");
    r.keys(g, "/schedule", {"base", "ratio", "n_max"});
    r.get(g, "base", "/schedule", s.schedule_base);
    r.get(g, "ratio", "/schedule", s.schedule_ratio);
    r.get(g, "n_max", "/schedule", s.n_max);
  }
  if (j.contains("noise")) {
    const json& g = j.at("noise");
    r.keys(g, "/noise", {"count", "flatness", "amplitude", "width", "node_spacing", "seed"});
    r.get(g, "count", "/noise", s.noise.count);
    r.get(g, "flatness", "/noise", s.noise.flatness);
    r.get(g, "amplitude", "/noise", s.noise.amplitude);
    r.get(g, "width", "/noise", s.noise.width);
    r.get(g, "node_spacing", "/noise", s.noise.node_spacing);
    r.get(g, "seed", "/noise", s.noise.seed);
  }
  if (j.contains("residue")) {
    const json& g = j.at("residue");
    r.keys(g, "/residue", {"m", "alpha_star", "width"});
    r.get(g, "m", "/residue", s.residue.m);
    r.get(g, "alpha_star", "/residue", s.residue.alpha_star);
    r.get(g, "width", "/residue", s.residue.width);
  }
  if (!j.contains("bubbles") || !j.at("bubbles").is_array() || j.at("bubbles").empty()) {
    r.check(false, "/bubbles", "expected a non-empty array");
  } else {
    const json& arr = j.at("bubbles");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string p = "/bubbles/" + std::to_string(k);
      const json& b = arr[k];
      r.keys(b, p, {"x", "w", "phase"});
      if (!b.is_object()) continue;
      BubbleSpec spec;
      r.get(b, "w", p, spec.w);
      r.get(b, "phase", p, spec.phase);
      if (!b.contains("x") || !b.at("x").is_array() || static_cast<int>(b.at("x").size()) != s.dim) {
        r.check(false, p + "/x", "expected an array of d numbers");
      } else {
        for (int jx = 0; jx < s.dim; ++jx) {
          if (!b.at("x")[jx].is_number())
            r.check(false, p + "/x/" + std::to_string(jx), "expected a number");
          else
            spec.x[jx] = b.at("x")[jx].get<double>();
        }
      }
      r.check(spec.w > 0.0, p + "/w", "must be positive");
      s.bubbles.push_back(spec);
    }
  }

  r.check(s.T > s.t_star, "/t_star", "must be smaller than T");
  r.check(s.half_width > 0.0, "/grid/L", "must be positive");
  r.check(s.n >= 64 && (s.n & (s.n - 1)) == 0, "/grid/N", "must be a power of two >= 64");
  r.check(s.dt > 0.0, "/dt", "must be positive");
  r.check(s.schedule_base > 0.0, "/schedule/base", "must be positive");
  r.check(s.schedule_ratio > 0.0 && s.schedule_ratio < 1.0, "/schedule/ratio", "must lie in (0, 1)");
  r.check(s.n_max >= 0, "/schedule/n_max", "must be non-negative");
  r.check(s.schedule_time(0) >= s.t_star - 1e-12, "/schedule/base", "t_0 must not precede t_star");
  r.check(s.samples_per_step >= 1, "/samples_per_step", "must be at least 1");
  r.check(s.noise.count >= 0, "/noise/count", "must be non-negative");
  r.check(s.noise.node_spacing > 0.0, "/noise/node_spacing", "must be positive");
  r.check(s.noise.width > 0.0, "/noise/width", "must be positive");
  r.check(s.residue.m >= 1, "/residue/m", "must be at least 1");
  r.check(s.residue.alpha_star >= 0.0, "/residue/alpha_star", "must be non-negative");
  r.check(s.residue.width > 0.0, "/residue/width", "must be positive");
  r.check(s.A >= 1.0, "/A", "must be >= 1");
  r.check(s.ball_radius > 0.0, "/ball_radius", "must be positive");
  if (r.errors.empty()) {
    try {
      validate_bubbles(s.bubbles, s.dim);
    } catch (const InvalidArgument& e) {
      r.errors.push_back(std::string("/bubbles: ") + e.what());
    }
  }
  if (!r.errors.empty()) {
    std::string msg = "scenario schema violations:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw InvalidArgument(msg);
  }
  return s;
}

}  // namespace

std::string Scenario::hash() const {
  // 64-bit FNV-1a of the canonical dump.
  const std::string text = to_json(*this).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("scenario: invalid JSON: ") + e.what());
  }
  return from_json(j);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("scenario: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) { return to_json(s).dump(2); }

Scenario default_scenario() {
  Scenario s;
  s.name = "two_bubble_d1";
  s.bubbles = {BubbleSpec{1.0, {-4.0, 0.0}, 0.0, {0.0, 0.0}},
               BubbleSpec{1.0, {4.0, 0.0}, 0.0, {0.0, 0.0}}};
  return s;
}

}  // namespace bwlab
