#pragma once

#include <cmath>

namespace hyptimes {

// Neumaier-compensated accumulator.  Keeps the running error of every
// addition in a separate carry so long Birkhoff sums and quadrature totals
// stay accurate to a few ulps of the exact result.
class CompensatedSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + carry_; }

  void reset() { sum_ = 0.0; carry_ = 0.0; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace hyptimes
