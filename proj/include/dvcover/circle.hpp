#pragma once

#include <cmath>

namespace dvcover {

/// Reduce to [0,1).
inline double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

inline double circle_dist(double a, double b) {
  const double d = std::abs(wrap01(a) - wrap01(b));
  return d > 0.5 ? 1.0 - d : d;
}

/// Arc [start, start + length] on the circle, start in [0,1), length in [0,1].
struct Arc {
  double start = 0.0;
  double length = 0.0;

  [[nodiscard]] double end() const { return start + length; }
  friend bool operator==(const Arc&, const Arc&) = default;
};

}  // namespace dvcover
