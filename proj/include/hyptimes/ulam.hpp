#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hyptimes/detect.hpp"
#include "hyptimes/maps.hpp"
#include "hyptimes/orbit.hpp"

namespace hyptimes {

// Probability mass per cell of a uniform K-cell partition of [-1,1).
// density(i) is relative to the normalized circle measure, so the uniform
// probability vector has density 1 in every cell.
struct EmpiricalDensity {
  int K = 0;
  std::vector<double> mass;

  double total_mass() const;
  double density(int i) const { return mass[static_cast<std::size_t>(i)] * K; }
  double sup_density() const;
  double l1_distance(const EmpiricalDensity& other) const;  // sum |m_i - m'_i|
  double l1_distance_to_uniform() const;
};

// Row-stochastic Ulam matrix P[i][j] = m(cell_i ∩ f^{-1}(cell_j)) / m(cell_i),
// stored sparsely per row (the exact-branch construction fills O(1) cells
// per row on average).
class UlamOperator {
 public:
  UlamOperator(int K) : K_(K), rows_(static_cast<std::size_t>(K)) {}

  int K() const { return K_; }
  double entry(int i, int j) const;
  double row_sum(int i) const;
  const std::vector<std::pair<int, double>>& row(int i) const {
    return rows_[static_cast<std::size_t>(i)];
  }

  // v := v P for a mass (row) vector of length K.
  std::vector<double> apply_left(const std::vector<double>& v) const;

  void add(int i, int j, double w);
  void sort_rows();

 private:
  int K_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

// Transfer operator at a point, via inverse branches:
// (T phi)(x) = sum_g phi(g(x)) / |f'(g(x))|.
double transfer_apply(const IntermittentCircleMap& map,
                      const std::function<double(CirclePoint)>& phi, CirclePoint x);

// Exact cell-overlap construction from the monotone inverse branches.
UlamOperator build_ulam_exact(const IntermittentCircleMap& map, int K);

// Stratified-sample estimate: samples_per_cell jittered strata per cell,
// row entries are hit fractions.  Same seed, same matrix.
UlamOperator build_ulam_sampled(const MapSystem& map, int K,
                                int samples_per_cell, std::uint64_t seed);

struct InvariantDensityResult {
  EmpiricalDensity density;
  int iterations = 0;
  double residual = 0.0;  // final L1 change
  bool converged = false;
};

// Left power iteration from the uniform vector; L1 tolerance on successive
// iterates.  Throws std::runtime_error if max_iters is hit (message carries
// the residual).
InvariantDensityResult invariant_density(const UlamOperator& P, double tol = 1e-10,
                                         int max_iters = 100000);

// Empirical pushforward of normalized Lebesgue restricted to
// H_n = {x : n is a hyperbolic time}: histogram of x_n over the ensemble
// points with n detected, each with weight 1/sample_size.  One orbit pass
// serves all requested n.
std::vector<EmpiricalDensity> pushforward_restricted(const MapSystem& map,
                                                     const EnsembleSpec& ensemble,
                                                     const HyperbolicParams& p,
                                                     const std::vector<std::int64_t>& ns,
                                                     int K);

// Cesaro average (1/n) sum_{j<n} f^j_* (ensemble measure), as a K-cell
// histogram.
EmpiricalDensity cesaro_density(const MapSystem& map, const EnsembleSpec& ensemble,
                                std::int64_t n, int K);

}  // namespace hyptimes
