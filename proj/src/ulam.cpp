#include "hyptimes/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "hyptimes/compensated.hpp"

namespace hyptimes {

double EmpiricalDensity::total_mass() const {
  CompensatedSum s;
  for (double m : mass) s.add(m);
  return s.value();
}

double EmpiricalDensity::sup_density() const {
  double top = 0.0;
  for (double m : mass) top = std::max(top, m * K);
  return top;
}

double EmpiricalDensity::l1_distance(const EmpiricalDensity& other) const {
  if (other.K != K) throw std::invalid_argument("l1_distance: mismatched K");
  CompensatedSum s;
  for (int i = 0; i < K; ++i) {
    s.add(std::fabs(mass[static_cast<std::size_t>(i)] -
                    other.mass[static_cast<std::size_t>(i)]));
  }
  return s.value();
}

double EmpiricalDensity::l1_distance_to_uniform() const {
  CompensatedSum s;
  double u = 1.0 / K;
  for (double m : mass) s.add(std::fabs(m - u));
  return s.value();
}

double UlamOperator::entry(int i, int j) const {
  const auto& row = rows_[static_cast<std::size_t>(i)];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const auto& e, int col) { return e.first < col; });
  return it != row.end() && it->first == j ? it->second : 0.0;
}

double UlamOperator::row_sum(int i) const {
  CompensatedSum s;
  for (const auto& [j, w] : rows_[static_cast<std::size_t>(i)]) s.add(w);
  return s.value();
}

std::vector<double> UlamOperator::apply_left(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != K_) {
    throw std::invalid_argument("apply_left: vector length != K");
  }
  std::vector<double> out(v.size(), 0.0);
  for (int i = 0; i < K_; ++i) {
    double vi = v[static_cast<std::size_t>(i)];
    if (vi == 0.0) continue;
    for (const auto& [j, w] : rows_[static_cast<std::size_t>(i)]) {
      out[static_cast<std::size_t>(j)] += vi * w;
    }
  }
  return out;
}

void UlamOperator::add(int i, int j, double w) {
  auto& row = rows_[static_cast<std::size_t>(i)];
  for (auto& [col, val] : row) {
    if (col == j) {
      val += w;
      return;
    }
  }
  row.emplace_back(j, w);
}

void UlamOperator::sort_rows() {
  for (auto& row : rows_) {
    std::sort(row.begin(), row.end());
  }
}

double transfer_apply(const IntermittentCircleMap& map,
                      const std::function<double(CirclePoint)>& phi, CirclePoint x) {
  auto [g1, g2] = map.inverse_branches(x);
  return phi(g1) * std::exp(map.log_inv_deriv_norm(g1)) +
         phi(g2) * std::exp(map.log_inv_deriv_norm(g2));
}

namespace {

int cell_of(double coord, int K) {
  double h = 2.0 / K;
  int idx = static_cast<int>(std::floor((coord + 1.0) / h));
  return std::clamp(idx, 0, K - 1);
}

// Adds the overlap of [lo, hi) with every partition cell to column j.
void accumulate_arc(UlamOperator& P, int K, double lo, double hi, int j) {
  if (!(hi > lo)) return;
  double h = 2.0 / K;
  int i0 = cell_of(lo, K);
  int i1 = cell_of(std::nextafter(hi, lo), K);
  for (int i = i0; i <= i1; ++i) {
    double cell_lo = -1.0 + i * h;
    double cell_hi = -1.0 + (i + 1) * h;
    double ov = std::min(hi, cell_hi) - std::max(lo, cell_lo);
    if (ov > 0.0) P.add(i, j, ov / h);
  }
}

}  // namespace

UlamOperator build_ulam_exact(const IntermittentCircleMap& map, int K) {
  if (K < 2) throw std::invalid_argument("build_ulam_exact: K < 2");
  (void)map;
  // Branch endpoint formulas extended continuously to the closed interval;
  // both branches are increasing, so cell images are intervals.
  auto g1 = [](double x) { double u = (1.0 + x) / 2.0; return u * u; };
  auto g2 = [](double x) { double w = (1.0 - x) / 2.0; return -(w * w); };
  UlamOperator P(K);
  double h = 2.0 / K;
  for (int j = 0; j < K; ++j) {
    double c = -1.0 + j * h;
    double d = j + 1 == K ? 1.0 : -1.0 + (j + 1) * h;
    accumulate_arc(P, K, g1(c), g1(d), j);
    accumulate_arc(P, K, g2(c), g2(d), j);
  }
  P.sort_rows();
  return P;
}

UlamOperator build_ulam_sampled(const MapSystem& map, int K, int samples_per_cell,
                                std::uint64_t seed) {
  if (K < 2) throw std::invalid_argument("build_ulam_sampled: K < 2");
  if (samples_per_cell < 1) {
    throw std::invalid_argument("build_ulam_sampled: samples_per_cell < 1");
  }
  UlamOperator P(K);
  double h = 2.0 / K;
  std::mt19937_64 eng(seed);
  double w = 1.0 / samples_per_cell;
  for (int i = 0; i < K; ++i) {
    double cell_lo = -1.0 + i * h;
    for (int t = 0; t < samples_per_cell; ++t) {
      double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
      CirclePoint x = wrap(cell_lo + h * (t + u) / samples_per_cell);
      CirclePoint y = map.eval(x);
      P.add(i, cell_of(y.coord, K), w);
    }
  }
  P.sort_rows();
  return P;
}

InvariantDensityResult invariant_density(const UlamOperator& P, double tol,
                                         int max_iters) {
  int K = P.K();
  std::vector<double> v(static_cast<std::size_t>(K), 1.0 / K);
  InvariantDensityResult res;
  res.density.K = K;
  for (int it = 1; it <= max_iters; ++it) {
    std::vector<double> next = P.apply_left(v);
    CompensatedSum total;
    for (double m : next) total.add(m);
    double norm = total.value();
    if (norm > 0.0) {
      for (double& m : next) m /= norm;
    }
    CompensatedSum change;
    for (int i = 0; i < K; ++i) {
      change.add(std::fabs(next[static_cast<std::size_t>(i)] -
                           v[static_cast<std::size_t>(i)]));
    }
    v = std::move(next);
    res.iterations = it;
    res.residual = change.value();
    if (res.residual <= tol) {
      res.converged = true;
      res.density.mass = std::move(v);
      return res;
    }
  }
  throw std::runtime_error("invariant_density: no convergence after " +
                           std::to_string(max_iters) +
                           " iterations, residual " + std::to_string(res.residual));
}

std::vector<EmpiricalDensity> pushforward_restricted(const MapSystem& map,
                                                     const EnsembleSpec& ensemble,
                                                     const HyperbolicParams& p,
                                                     const std::vector<std::int64_t>& ns,
                                                     int K) {
  if (ns.empty()) throw std::invalid_argument("pushforward_restricted: no n values");
  std::int64_t n_top = *std::max_element(ns.begin(), ns.end());
  if (n_top <= 0) throw std::invalid_argument("pushforward_restricted: n <= 0");

  std::vector<std::vector<std::int64_t>> counts(
      ns.size(), std::vector<std::int64_t>(static_cast<std::size_t>(K), 0));
  std::int64_t sample_size = 0;
  for (CirclePoint x0 : ensemble_points(ensemble)) {
    OrbitTrace trace;
    try {
      trace = generate_orbit(map, x0, n_top, p.delta);
    } catch (const PartialTraceError&) {
      continue;
    } catch (const std::invalid_argument&) {
      continue;
    }
    sample_size += 1;
    DetectionResult det = detect_fast(trace, p);
    for (std::size_t q = 0; q < ns.size(); ++q) {
      std::int64_t n = ns[q];
      if (std::binary_search(det.times.begin(), det.times.end(), n)) {
        counts[q][static_cast<std::size_t>(
            cell_of(trace.x[static_cast<std::size_t>(n)].coord, K))] += 1;
      }
    }
  }

  std::vector<EmpiricalDensity> out(ns.size());
  for (std::size_t q = 0; q < ns.size(); ++q) {
    out[q].K = K;
    out[q].mass.assign(static_cast<std::size_t>(K), 0.0);
    if (sample_size > 0) {
      for (int i = 0; i < K; ++i) {
        out[q].mass[static_cast<std::size_t>(i)] =
            static_cast<double>(counts[q][static_cast<std::size_t>(i)]) /
            static_cast<double>(sample_size);
      }
    }
  }
  return out;
}

EmpiricalDensity cesaro_density(const MapSystem& map, const EnsembleSpec& ensemble,
                                std::int64_t n, int K) {
  if (n <= 0) throw std::invalid_argument("cesaro_density: n <= 0");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(K), 0);
  std::vector<std::int64_t> tmp(static_cast<std::size_t>(K), 0);
  std::int64_t used = 0;
  for (CirclePoint x0 : ensemble_points(ensemble)) {
    std::fill(tmp.begin(), tmp.end(), 0);
    CirclePoint x = x0;
    bool ok = map.dist_to_S(x) > kExceptionalGuard;
    for (std::int64_t j = 0; ok && j < n; ++j) {
      tmp[static_cast<std::size_t>(cell_of(x.coord, K))] += 1;
      x = map.eval(x);
      if (j + 1 < n && map.dist_to_S(x) <= kExceptionalGuard) ok = false;
    }
    if (!ok) continue;
    used += 1;
    for (int i = 0; i < K; ++i) {
      counts[static_cast<std::size_t>(i)] += tmp[static_cast<std::size_t>(i)];
    }
  }
  EmpiricalDensity d;
  d.K = K;
  d.mass.assign(static_cast<std::size_t>(K), 0.0);
  if (used > 0) {
    double w = 1.0 / (static_cast<double>(used) * static_cast<double>(n));
    for (int i = 0; i < K; ++i) {
      d.mass[static_cast<std::size_t>(i)] =
          static_cast<double>(counts[static_cast<std::size_t>(i)]) * w;
    }
  }
  return d;
}

}  // namespace hyptimes
