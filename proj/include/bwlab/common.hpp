#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace bwlab {

using cplx = std::complex<double>;

/// A point (or d-vector) in R^d for d in {1, 2}. The second component is
/// ignored, and kept at zero, when d == 1.
using Point = std::array<double, 2>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The spatial grid cannot resolve the requested profile.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// The integrated field stopped being finite.
class BlowupError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to converge or to bracket a root.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

inline double dot(const Point& a, const Point& b, int dim) {
  return dim == 1 ? a[0] * b[0] : a[0] * b[0] + a[1] * b[1];
}

inline double norm2(const Point& a, int dim) { return dot(a, a, dim); }

inline Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }

}  // namespace bwlab
