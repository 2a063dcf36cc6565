#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "hyptimes/compensated.hpp"
#include "hyptimes/orbit.hpp"

namespace hyptimes {

// Detection parameters.  n is a hyperbolic time for x when for every
// 1 <= k <= n
//   sum_{j=n-k}^{n-1} a_j  <=  k log sigma        (contraction condition)
//   r_{n-k}  >=  b k log sigma                    (recurrence condition)
// with a, r as stored in OrbitTrace.  Inequalities are evaluated exactly
// as written (non-strict, no slack) unless tie_tolerance is set.
struct HyperbolicParams {
  HyperbolicParams(double sigma, double delta, double b, double beta);

  double sigma;
  double delta;
  double b;
  double beta;
  double tie_tolerance = 0.0;

  double log_sigma;  // cached log(sigma) < 0
  double bc;         // b * (-log sigma) > 0
};

struct DetectionResult {
  std::vector<std::int64_t> times;  // strictly increasing
  std::optional<std::int64_t> first;

  std::int64_t count_at(std::int64_t n) const;   // #{times <= n}
  double frequency_at(std::int64_t n) const;     // count_at(n) / n
};

// Direct transcription of the definition: O(N^2), windows accumulated
// term by term.  Oracle for detect_fast.
DetectionResult detect_brute(const OrbitTrace& trace, const HyperbolicParams& p);

// One-pass scan.  With S_n the compensated prefix sums and T_n = S_n - n
// log sigma, the contraction condition is T_n <= min_{m<n} T_m; the
// recurrence condition is n >= max_{m<n} (m + ceil(-r_m / bc)).
DetectionResult detect_fast(const OrbitTrace& trace, const HyperbolicParams& p);

// Incremental form of detect_fast; shared by every driver that wants to
// stop at the first hyperbolic time without storing the orbit.
class HypScanner {
 public:
  explicit HypScanner(const HyperbolicParams& p) : p_(p) {}

  // Feeds step observables (a_j, r_j); returns true when n = j+1 is a
  // hyperbolic time.  Must be called with j = 0, 1, 2, ... in order.
  bool feed(double a, double r);

  std::int64_t steps_fed() const { return n_; }

 private:
  HyperbolicParams p_;
  CompensatedSum prefix_;
  double min_t_ = 0.0;        // min over m <= n of T_m, seeded with T_0 = 0
  std::int64_t max_req_ = 0;  // max over m < n of m + ceil(-r_m / bc)
  std::int64_t n_ = 0;
};

struct FirstTimeResult {
  enum class Status { kFound, kCensored, kHitExceptional };
  Status status;
  std::int64_t value = 0;  // the time, or steps completed before hitting S
};

// Lazily iterates the orbit until the first hyperbolic time, the horizon,
// or the exceptional set.  Agrees with min(times) of detect_fast on the
// same trace by construction.
FirstTimeResult first_hyperbolic_time(const MapSystem& map, CirclePoint x0,
                                      const HyperbolicParams& p,
                                      std::int64_t horizon);

struct FirstTimeDistribution {
  std::map<std::int64_t, std::int64_t> histogram;  // first time -> count
  std::int64_t censored = 0;      // no hyperbolic time up to the horizon
  std::int64_t dropped_on_s = 0;  // orbit hit S; excluded from the sample
  std::int64_t sample_size = 0;   // sum of histogram counts + censored
  std::int64_t horizon = 0;

  // E[min(h, n)] with censored points entering at the cap n.
  double truncated_mean(std::int64_t n) const;
  // P(h > n); censored points count as h > horizon >= n.
  double survival(std::int64_t n) const;
};

FirstTimeDistribution first_time_distribution(const MapSystem& map,
                                              const EnsembleSpec& ensemble,
                                              const HyperbolicParams& p,
                                              std::int64_t horizon);

// Empirical masses of the hyperbolic-time sets over an ensemble:
//   time_mass[n]       fraction of points for which n is a hyperbolic time
//   first_time_mass[n] fraction whose first hyperbolic time equals n
// gap_counts[k] counts consecutive detected times at distance k.
struct TimeSetStatistics {
  std::vector<double> time_mass;        // index 0 unused, 1..n_max
  std::vector<double> first_time_mass;  // same indexing
  std::map<std::int64_t, std::int64_t> gap_counts;
  std::int64_t sample_size = 0;
  std::int64_t dropped_on_s = 0;
};

TimeSetStatistics time_set_statistics(const MapSystem& map,
                                      const EnsembleSpec& ensemble,
                                      const HyperbolicParams& p,
                                      std::int64_t n_max);

struct FrequencyReport {
  std::vector<std::int64_t> horizons;
  std::vector<double> theta_grid;
  // fraction_at[i][j] = fraction of points with frequency >= theta_grid[j]
  // at horizons[i].
  std::vector<std::vector<double>> fraction_at;
  // Per-point frequency at the largest horizon, ensemble order.
  std::vector<double> final_frequency;
  std::int64_t sample_size = 0;
  std::int64_t dropped_on_s = 0;
};

FrequencyReport frequency_report(const MapSystem& map, const EnsembleSpec& ensemble,
                                 const HyperbolicParams& p,
                                 std::vector<std::int64_t> horizons,
                                 std::vector<double> theta_grid);

struct TailReport {
  std::vector<std::int64_t> schedule;      // geometric n grid up to horizon
  std::vector<double> survival;            // P(h > n) on the schedule
  std::vector<double> truncated_mean;      // E[min(h, n)] on the schedule
  double slope = 0.0;                      // log-log LS slope, top decade
  double slope_ci_lo = 0.0;                // bootstrap 2.5% quantile
  double slope_ci_hi = 0.0;                // bootstrap 97.5% quantile
  std::int64_t fit_points = 0;             // uncensored samples in the window
  bool fit_ok = false;                     // >= 200 samples in the window
};

// Survival/truncated-mean schedule plus a least-squares tail-index fit over
// the top decade of uncensored first times, with a seeded bootstrap CI
// (200 resamples).
TailReport tail_report(const FirstTimeDistribution& dist, std::uint64_t seed = 1);

}  // namespace hyptimes
