#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hyptimes/detect.hpp"
#include "hyptimes/maps.hpp"
#include "hyptimes/orbit.hpp"
#include "hyptimes/quadrature.hpp"

namespace hyptimes {

struct IntegralEstimate {
  double value = 0.0;
  double coarse_value = 0.0;
  std::int64_t evals = 0;
  bool converged = true;
};

// integral of log ||Df^{-1}|| dm over the circle (normalized Lebesgue m),
// adaptive quadrature with analytic log tails around the exceptional set.
IntegralEstimate lyapunov_integral_quadrature(const MapSystem& map, double tol = 1e-9);

struct EnsembleMean {
  double mean = 0.0;
  std::int64_t used = 0;
  std::int64_t dropped_on_s = 0;
};

// Ensemble/time average of the same observable: mean over ensemble points
// of the horizon-step Birkhoff average of log ||Df^{-1}||.
EnsembleMean lyapunov_integral_ensemble(const MapSystem& map,
                                        const EnsembleSpec& ensemble,
                                        std::int64_t horizon);

// integral of |log dist_delta(x,S)|^p dm, p >= 1.  No truncation means
// delta_trunc = nullopt.  Segments split at S and at the equidistant kinks;
// the innermost cell around each S point uses the closed-form tail.
IntegralEstimate log_dist_moment(const MapSystem& map, double p,
                                 std::optional<double> delta_trunc = std::nullopt,
                                 double tol = 1e-9);

// x_{n+1} = (1 + x_n)^2 / 4, the inverse-branch orbit climbing toward the
// neutral fixed point at the circle point +-1.  Requires x1 in (0, 1/2);
// the per-step bounds below need the start below 1/2.
std::vector<double> recurrence_sequence(double x1, std::int64_t n);

// Per-step checks on the recurrence sequence and the divergence surrogate
// S_N = sum_{n<=N} n (x_{n+1} - x_n):
//   upper bound      x_n <= 1 - 1/(2n)
//   increment        x_{n+1} - x_n == (1 - x_n)^2 / 4   (to 1e-14)
//   increment bound  x_{n+1} - x_n >= 1/(16 n^2) - 1e-16
//   partial sums     S_N >= H_N / 16 for every N (H_N harmonic)
struct RecurrenceSequenceReport {
  double x1 = 0.0;
  std::int64_t n = 0;
  bool upper_bound_ok = true;
  std::int64_t upper_bound_first_fail = 0;
  double max_increment_identity_error = 0.0;
  bool increment_bound_ok = true;
  std::int64_t increment_bound_first_fail = 0;
  bool harmonic_bound_ok = true;
  std::int64_t harmonic_bound_first_fail = 0;
  std::vector<std::int64_t> checkpoints;   // geometric N grid
  std::vector<double> partial_sum;         // S_N at the checkpoints
  std::vector<double> growth_ratio;        // S_N / log N
  double final_partial_sum = 0.0;
  double final_growth_ratio = 0.0;
};

RecurrenceSequenceReport recurrence_sequence_report(double x1, std::int64_t n);

// Pulls pairs (y, z) with |y - z| <= 2 * arc_radius back from x_n through
// the branch itinerary of the orbit and checks, for every detected
// hyperbolic time n <= n_max and every 1 <= k < n,
//   dist(y_{n-k}, z_{n-k}) <= sigma^{k/2} dist(y_n, z_n).
struct ContractionReport {
  std::int64_t pairs_checked = 0;
  std::int64_t pairs_discarded = 0;  // pullback straddled a branch boundary
  std::int64_t violations = 0;
  double worst_margin = 1.0;  // min over checks of (bound - value) / bound
};

ContractionReport contraction_check(const MapSystem& map, const OrbitTrace& trace,
                                    const DetectionResult& det,
                                    const HyperbolicParams& p, std::int64_t n_max,
                                    int pairs = 10, double arc_radius = 1e-6);

// Same pullback pairs; bounds the determinant distortion
//   max |log |det Df^n(y)| - log |det Df^n(z)||
// at hyperbolic times n <= n_max.  C1_hat = exp of the max.
struct DistortionReport {
  std::int64_t pairs_checked = 0;
  std::int64_t pairs_discarded = 0;
  double max_log_ratio = 0.0;
  double c1_hat = 1.0;
};

DistortionReport distortion_check(const MapSystem& map, const OrbitTrace& trace,
                                  const DetectionResult& det,
                                  const HyperbolicParams& p, std::int64_t n_max,
                                  int pairs = 10, double arc_radius = 1e-6);

// At every detected time n the definition already forces the prefix mean of
// a to sit at or below log sigma; re-checks it with the scanner's own
// arithmetic and reports the worst prefix mean observed.
struct BirkhoffNegativityReport {
  std::int64_t times_checked = 0;
  std::int64_t violations = 0;
  double worst_mean = 0.0;  // max over detected times of mean(a_0..a_{n-1})
};

BirkhoffNegativityReport birkhoff_negativity(const OrbitTrace& trace,
                                             const DetectionResult& det,
                                             const HyperbolicParams& p);

// Ensemble mass of E_k = { phi_k > 1/k } where phi_k is the horizon-step
// Birkhoff average of -log dist_{delta_k}(., S).
struct SlowRecurrenceProfile {
  std::vector<std::int64_t> k;
  std::vector<double> delta_k;
  std::vector<double> mass;        // empirical mass of E_k
  std::vector<double> bound;       // 2^{-(k+1)}
  std::vector<bool> within_bound;  // mass <= bound
  std::int64_t sample_size = 0;
  std::int64_t dropped_on_s = 0;
};

SlowRecurrenceProfile slow_recurrence_profile(const MapSystem& map,
                                              const EnsembleSpec& ensemble,
                                              const std::vector<std::int64_t>& ks,
                                              const std::vector<double>& deltas,
                                              std::int64_t horizon);

// Picks delta_k by bisection so the truncated moment
// integral of -log dist_{delta} dm falls below 1/(k 2^{k+1}); by the Markov
// inequality the invariant mass of E_k is then at most 2^{-(k+1)}.
std::vector<double> slow_recurrence_schedule(const MapSystem& map,
                                             const std::vector<std::int64_t>& ks);

}  // namespace hyptimes
