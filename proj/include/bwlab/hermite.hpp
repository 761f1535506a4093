#pragma once

#include <array>

namespace bwlab {

/// Value and first two derivatives of the quintic Hermite interpolant on
/// [x0, x1] matching (f, f', f'') at both ends.
struct Jet {
  double f = 0.0;
  double df = 0.0;
  double d2f = 0.0;
};

inline Jet quintic_hermite(double x0, double x1, const Jet& a, const Jet& b, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  // Basis functions on [0,1] and their derivatives.
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double h3 = 10 * t3 - 15 * t4 + 6 * t5;
  const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h5 = 0.5 * (t3 - 2 * t4 + t5);

  const double d0 = -30 * t2 + 60 * t3 - 30 * t4;
  const double d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double d2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
  const double d3 = 30 * t2 - 60 * t3 + 30 * t4;
  const double d4 = -12 * t2 + 28 * t3 - 15 * t4;
  const double d5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);

  const double s0 = -60 * t + 180 * t2 - 120 * t3;
  const double s1 = -36 * t + 96 * t2 - 60 * t3;
  const double s2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3);
  const double s3 = 60 * t - 180 * t2 + 120 * t3;
  const double s4 = -24 * t + 84 * t2 - 60 * t3;
  const double s5 = 0.5 * (6 * t - 24 * t2 + 20 * t3);

  const double fa = a.f, ga = a.df * h, ka = a.d2f * h * h;
  const double fb = b.f, gb = b.df * h, kb = b.d2f * h * h;
  Jet out;
  out.f = h0 * fa + h1 * ga + h2 * ka + h3 * fb + h4 * gb + h5 * kb;
  out.df = (d0 * fa + d1 * ga + d2 * ka + d3 * fb + d4 * gb + d5 * kb) / h;
  out.d2f = (s0 * fa + s1 * ga + s2 * ka + s3 * fb + s4 * gb + s5 * kb) / (h * h);
  return out;
}

}  // namespace bwlab
