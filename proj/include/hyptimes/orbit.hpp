#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyptimes/circle.hpp"
#include "hyptimes/maps.hpp"

namespace hyptimes {

// Orbit segment with the two detector observables per step:
//   a[j] = log ||Df(x_j)^{-1}||
//   r[j] = log dist_delta(x_j, S)   (0 when dist > delta, i.e. "far")
// x has one more entry than a and r.  steps() == a.size().
struct OrbitTrace {
  std::vector<CirclePoint> x;
  std::vector<double> a;
  std::vector<double> r;
  double delta = 1.0;

  std::int64_t steps() const { return static_cast<std::int64_t>(a.size()); }
};

// Orbit generation hit the exceptional set; carries the completed prefix.
class PartialTraceError : public std::runtime_error {
 public:
  PartialTraceError(OrbitTrace prefix, std::int64_t completed_steps)
      : std::runtime_error("orbit hit the exceptional set after " +
                           std::to_string(completed_steps) + " completed steps"),
        prefix(std::move(prefix)),
        completed_steps(completed_steps) {}

  OrbitTrace prefix;
  std::int64_t completed_steps;
};

// dist_delta(x, S): plain distance when <= delta, otherwise 1.
// Throws std::domain_error when x lies exactly on S.
double dist_truncated(const MapSystem& map, CirclePoint x, double delta);

// Points closer to S than this are treated as on S and abort the orbit.
inline constexpr double kExceptionalGuard = 1e-300;

// Generates x_0 .. x_n and observables for steps 0 .. n-1.
// Throws std::invalid_argument if x0 is on S, PartialTraceError if the
// orbit lands on S before completing n steps.
OrbitTrace generate_orbit(const MapSystem& map, CirclePoint x0, std::int64_t n,
                          double delta);

enum class Observable {
  kLogInvDeriv,  // a[j]
  kNegLogDist,   // -r[j]
};

// Compensated mean of the first n observable values.
double birkhoff_average(const OrbitTrace& trace, Observable obs, std::int64_t n);

// Same trace re-truncated at a smaller delta.  Requires new_delta <= delta.
OrbitTrace retruncate(const OrbitTrace& trace, double new_delta);

struct EnsembleSpec {
  enum class Kind { kGrid, kRandom };
  Kind kind = Kind::kGrid;
  std::int64_t size = 0;
  std::uint64_t seed = 0;
};

// Grid: cell midpoints of a uniform partition of [-1,1).  Random: iid
// uniform draws from a seeded mt19937_64, identical across platforms.
std::vector<CirclePoint> ensemble_points(const EnsembleSpec& spec);

}  // namespace hyptimes
