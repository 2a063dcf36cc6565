#pragma once

#include <cmath>
#include <stdexcept>

namespace hyptimes {

// Point on the circle R/2Z, coordinate kept in [-1, 1).  The two interval
// endpoints -1 and 1 name the same circle point; wrap() always picks -1.
struct CirclePoint {
  double coord = 0.0;
};

inline CirclePoint wrap(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("wrap: non-finite coordinate");
  double y = x - 2.0 * std::floor((x + 1.0) / 2.0);
  if (y >= 1.0) y = -1.0;  // floor rounding can leave y == 1.0
  return CirclePoint{y};
}

// Geodesic distance, in [0, 1] (half the circumference).
inline double geo_dist(CirclePoint a, CirclePoint b) {
  double d = std::fabs(a.coord - b.coord);
  return d <= 1.0 ? d : 2.0 - d;
}

}  // namespace hyptimes
