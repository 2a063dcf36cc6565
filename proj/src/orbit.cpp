#include "hyptimes/orbit.hpp"

#include <cmath>
#include <stdexcept>

#include "hyptimes/compensated.hpp"

namespace hyptimes {

double dist_truncated(const MapSystem& map, CirclePoint x, double delta) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("dist_truncated: delta must lie in (0, 1]");
  }
  double d = map.dist_to_S(x);
  if (d <= 0.0) throw std::domain_error("dist_truncated: point on the exceptional set");
  return d <= delta ? d : 1.0;
}

OrbitTrace generate_orbit(const MapSystem& map, CirclePoint x0, std::int64_t n,
                          double delta) {
  if (n < 0) throw std::invalid_argument("generate_orbit: negative length");
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("generate_orbit: delta must lie in (0, 1]");
  }
  if (map.dist_to_S(x0) <= kExceptionalGuard) {
    throw std::invalid_argument("generate_orbit: x0 on the exceptional set");
  }

  OrbitTrace t;
  t.delta = delta;
  t.x.reserve(static_cast<std::size_t>(n) + 1);
  t.a.reserve(static_cast<std::size_t>(n));
  t.r.reserve(static_cast<std::size_t>(n));
  t.x.push_back(x0);

  CirclePoint x = x0;
  for (std::int64_t j = 0; j < n; ++j) {
    double d = map.dist_to_S(x);
    if (d <= kExceptionalGuard) {
      // Keep the next point: its value is still defined, only the
      // observables at x blow up.
      t.x.push_back(map.eval(x));
      throw PartialTraceError(std::move(t), j);
    }
    t.a.push_back(map.log_inv_deriv_norm(x));
    t.r.push_back(std::log(d <= delta ? d : 1.0));
    x = map.eval(x);
    t.x.push_back(x);
  }
  return t;
}

double birkhoff_average(const OrbitTrace& trace, Observable obs, std::int64_t n) {
  if (n <= 0 || n > trace.steps()) {
    throw std::invalid_argument("birkhoff_average: n outside [1, steps]");
  }
  CompensatedSum sum;
  if (obs == Observable::kLogInvDeriv) {
    for (std::int64_t j = 0; j < n; ++j) sum.add(trace.a[static_cast<std::size_t>(j)]);
  } else {
    for (std::int64_t j = 0; j < n; ++j) sum.add(-trace.r[static_cast<std::size_t>(j)]);
  }
  return sum.value() / static_cast<double>(n);
}

OrbitTrace retruncate(const OrbitTrace& trace, double new_delta) {
  if (!(new_delta > 0.0) || new_delta > trace.delta) {
    throw std::invalid_argument("retruncate: need 0 < new_delta <= delta");
  }
  OrbitTrace out = trace;
  out.delta = new_delta;
  double bar = std::log(new_delta);
  for (double& r : out.r) {
    if (r > bar) r = 0.0;  // beyond the new cutoff counts as far
  }
  return out;
}

std::vector<CirclePoint> ensemble_points(const EnsembleSpec& spec) {
  if (spec.size <= 0) throw std::invalid_argument("ensemble_points: size must be > 0");
  std::vector<CirclePoint> pts;
  pts.reserve(static_cast<std::size_t>(spec.size));
  if (spec.kind == EnsembleSpec::Kind::kGrid) {
    double h = 2.0 / static_cast<double>(spec.size);
    for (std::int64_t i = 0; i < spec.size; ++i) {
      pts.push_back(wrap(-1.0 + h * (static_cast<double>(i) + 0.5)));
    }
  } else {
    std::mt19937_64 eng(spec.seed);
    for (std::int64_t i = 0; i < spec.size; ++i) {
      double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
      pts.push_back(wrap(2.0 * u - 1.0));
    }
  }
  return pts;
}

}  // namespace hyptimes
