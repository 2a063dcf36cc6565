#pragma once

#include <cstdint>
#include <functional>

namespace hyptimes {

struct QuadratureResult {
  double value = 0.0;
  double coarse_value = 0.0;  // same integral at 16x looser tolerance
  std::int64_t evals = 0;
  bool converged = true;      // false if the depth cap was hit anywhere
};

// Adaptive Simpson with Richardson correction; per-interval budget halves
// on each split, totals accumulated with compensation.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, std::int64_t* evals = nullptr,
                        bool* converged = nullptr, int max_depth = 60);

// Exact tails of the log-power singularity: integral over (0, eps] of
// (-log u)^p du for integer p >= 0, via the recurrence
// I_p = eps T^p + p I_{p-1}, T = -log eps.  For non-integer p the
// substituted integral of t^p e^{-t} over [T, inf) is evaluated numerically.
double log_power_tail(double p, double eps);

}  // namespace hyptimes
