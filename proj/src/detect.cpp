#include "hyptimes/detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyptimes {

HyperbolicParams::HyperbolicParams(double sigma, double delta, double b, double beta)
    : sigma(sigma), delta(delta), b(b), beta(beta) {
  if (!(sigma > 0.0) || !(sigma < 1.0)) {
    throw std::invalid_argument("params: need 0 < sigma < 1");
  }
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("params: need 0 < delta <= 1");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("params: need beta > 0");
  double cap = std::min(0.5, 1.0 / (4.0 * beta));
  if (!(b > 0.0) || !(b < cap)) {
    throw std::invalid_argument("params: need 0 < b < min{1/2, 1/(4 beta)} = " +
                                std::to_string(cap));
  }
  log_sigma = std::log(sigma);
  bc = b * -log_sigma;
}

std::int64_t DetectionResult::count_at(std::int64_t n) const {
  return std::upper_bound(times.begin(), times.end(), n) - times.begin();
}

double DetectionResult::frequency_at(std::int64_t n) const {
  if (n <= 0) throw std::invalid_argument("frequency_at: n must be positive");
  return static_cast<double>(count_at(n)) / static_cast<double>(n);
}

static void check_trace_params(const OrbitTrace& trace, const HyperbolicParams& p) {
  if (trace.delta != p.delta) {
    throw std::invalid_argument("detect: trace delta does not match params delta");
  }
}

DetectionResult detect_brute(const OrbitTrace& trace, const HyperbolicParams& p) {
  check_trace_params(trace, p);
  DetectionResult res;
  const std::int64_t n_steps = trace.steps();
  const double tol = p.tie_tolerance;
  for (std::int64_t n = 1; n <= n_steps; ++n) {
    CompensatedSum window;
    bool ok = true;
    for (std::int64_t k = 1; k <= n; ++k) {
      std::size_t j = static_cast<std::size_t>(n - k);
      window.add(trace.a[j]);
      if (window.value() > static_cast<double>(k) * p.log_sigma + tol) {
        ok = false;
        break;
      }
      if (trace.r[j] < p.b * static_cast<double>(k) * p.log_sigma - tol) {
        ok = false;
        break;
      }
    }
    if (ok) res.times.push_back(n);
  }
  if (!res.times.empty()) res.first = res.times.front();
  return res;
}

bool HypScanner::feed(double a, double r) {
  // Recurrence condition rewritten as n >= m + ceil(-r_m / bc): a visit at
  // depth r_m bars hyperbolic times for the next ceil(-r_m / bc) steps.
  if (r < 0.0) {
    double q = std::ceil((-r - p_.tie_tolerance) / p_.bc);
    std::int64_t req = n_ + (q > 0.0 ? static_cast<std::int64_t>(q) : 0);
    max_req_ = std::max(max_req_, req);
  }
  prefix_.add(a);
  n_ += 1;
  double t = prefix_.value() - static_cast<double>(n_) * p_.log_sigma;
  bool hyp = t <= min_t_ + p_.tie_tolerance && n_ >= max_req_;
  min_t_ = std::min(min_t_, t);
  return hyp;
}

DetectionResult detect_fast(const OrbitTrace& trace, const HyperbolicParams& p) {
  check_trace_params(trace, p);
  DetectionResult res;
  HypScanner scan(p);
  const std::int64_t n_steps = trace.steps();
  for (std::int64_t j = 0; j < n_steps; ++j) {
    std::size_t u = static_cast<std::size_t>(j);
    if (scan.feed(trace.a[u], trace.r[u])) res.times.push_back(j + 1);
  }
  if (!res.times.empty()) res.first = res.times.front();
  return res;
}

FirstTimeResult first_hyperbolic_time(const MapSystem& map, CirclePoint x0,
                                      const HyperbolicParams& p, std::int64_t horizon) {
  if (horizon <= 0) throw std::invalid_argument("first_hyperbolic_time: horizon <= 0");
  HypScanner scan(p);
  CirclePoint x = x0;
  for (std::int64_t j = 0; j < horizon; ++j) {
    double d = map.dist_to_S(x);
    if (d <= kExceptionalGuard) {
      return {FirstTimeResult::Status::kHitExceptional, j};
    }
    double a = map.log_inv_deriv_norm(x);
    double r = std::log(d <= p.delta ? d : 1.0);
    if (scan.feed(a, r)) return {FirstTimeResult::Status::kFound, j + 1};
    x = map.eval(x);
  }
  return {FirstTimeResult::Status::kCensored, horizon};
}

double FirstTimeDistribution::truncated_mean(std::int64_t n) const {
  if (sample_size == 0) return 0.0;
  CompensatedSum sum;
  for (const auto& [k, c] : histogram) {
    sum.add(static_cast<double>(std::min(k, n)) * static_cast<double>(c));
  }
  sum.add(static_cast<double>(n) * static_cast<double>(censored));
  return sum.value() / static_cast<double>(sample_size);
}

double FirstTimeDistribution::survival(std::int64_t n) const {
  if (sample_size == 0) return 0.0;
  std::int64_t above = censored;
  for (auto it = histogram.upper_bound(n); it != histogram.end(); ++it) {
    above += it->second;
  }
  return static_cast<double>(above) / static_cast<double>(sample_size);
}

FirstTimeDistribution first_time_distribution(const MapSystem& map,
                                              const EnsembleSpec& ensemble,
                                              const HyperbolicParams& p,
                                              std::int64_t horizon) {
  FirstTimeDistribution dist;
  dist.horizon = horizon;
  for (CirclePoint x0 : ensemble_points(ensemble)) {
    if (map.dist_to_S(x0) <= kExceptionalGuard) {
      dist.dropped_on_s += 1;
      continue;
    }
    FirstTimeResult r = first_hyperbolic_time(map, x0, p, horizon);
    switch (r.status) {
      case FirstTimeResult::Status::kFound:
        dist.histogram[r.value] += 1;
        dist.sample_size += 1;
        break;
      case FirstTimeResult::Status::kCensored:
        dist.censored += 1;
        dist.sample_size += 1;
        break;
      case FirstTimeResult::Status::kHitExceptional:
        dist.dropped_on_s += 1;
        break;
    }
  }
  return dist;
}

TimeSetStatistics time_set_statistics(const MapSystem& map, const EnsembleSpec& ensemble,
                                      const HyperbolicParams& p, std::int64_t n_max) {
  if (n_max <= 0) throw std::invalid_argument("time_set_statistics: n_max <= 0");
  TimeSetStatistics st;
  std::vector<std::int64_t> time_cnt(static_cast<std::size_t>(n_max) + 1, 0);
  std::vector<std::int64_t> first_cnt(static_cast<std::size_t>(n_max) + 1, 0);
  for (CirclePoint x0 : ensemble_points(ensemble)) {
    OrbitTrace trace;
    try {
      trace = generate_orbit(map, x0, n_max, p.delta);
    } catch (const PartialTraceError&) {
      st.dropped_on_s += 1;
      continue;
    } catch (const std::invalid_argument&) {
      st.dropped_on_s += 1;
      continue;
    }
    DetectionResult det = detect_fast(trace, p);
    st.sample_size += 1;
    for (std::int64_t t : det.times) time_cnt[static_cast<std::size_t>(t)] += 1;
    if (det.first && *det.first <= n_max) {
      first_cnt[static_cast<std::size_t>(*det.first)] += 1;
    }
    for (std::size_t i = 1; i < det.times.size(); ++i) {
      st.gap_counts[det.times[i] - det.times[i - 1]] += 1;
    }
  }
  st.time_mass.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  st.first_time_mass.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (st.sample_size > 0) {
    for (std::int64_t n = 1; n <= n_max; ++n) {
      std::size_t u = static_cast<std::size_t>(n);
      st.time_mass[u] = static_cast<double>(time_cnt[u]) / st.sample_size;
      st.first_time_mass[u] = static_cast<double>(first_cnt[u]) / st.sample_size;
    }
  }
  return st;
}

FrequencyReport frequency_report(const MapSystem& map, const EnsembleSpec& ensemble,
                                 const HyperbolicParams& p,
                                 std::vector<std::int64_t> horizons,
                                 std::vector<double> theta_grid) {
  if (horizons.empty()) throw std::invalid_argument("frequency_report: no horizons");
  std::sort(horizons.begin(), horizons.end());
  FrequencyReport rep;
  rep.horizons = horizons;
  rep.theta_grid = std::move(theta_grid);
  std::int64_t n_top = horizons.back();

  std::vector<std::vector<std::int64_t>> hits(
      horizons.size(), std::vector<std::int64_t>(rep.theta_grid.size(), 0));
  for (CirclePoint x0 : ensemble_points(ensemble)) {
    OrbitTrace trace;
    try {
      trace = generate_orbit(map, x0, n_top, p.delta);
    } catch (const PartialTraceError&) {
      rep.dropped_on_s += 1;
      continue;
    } catch (const std::invalid_argument&) {
      rep.dropped_on_s += 1;
      continue;
    }
    DetectionResult det = detect_fast(trace, p);
    rep.sample_size += 1;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      double freq = det.frequency_at(horizons[i]);
      for (std::size_t t = 0; t < rep.theta_grid.size(); ++t) {
        if (freq >= rep.theta_grid[t]) hits[i][t] += 1;
      }
    }
    rep.final_frequency.push_back(det.frequency_at(n_top));
  }
  rep.fraction_at.assign(horizons.size(),
                         std::vector<double>(rep.theta_grid.size(), 0.0));
  if (rep.sample_size > 0) {
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      for (std::size_t t = 0; t < rep.theta_grid.size(); ++t) {
        rep.fraction_at[i][t] =
            static_cast<double>(hits[i][t]) / static_cast<double>(rep.sample_size);
      }
    }
  }
  return rep;
}

namespace {

std::vector<std::int64_t> geometric_schedule(std::int64_t horizon) {
  std::vector<std::int64_t> sched;
  for (std::int64_t base = 1; base <= horizon; base *= 10) {
    for (std::int64_t mult : {1, 2, 5}) {
      std::int64_t n = base * mult;
      if (n <= horizon) sched.push_back(n);
    }
  }
  if (sched.empty() || sched.back() != horizon) sched.push_back(horizon);
  return sched;
}

double survival_of_sample(const std::vector<std::int64_t>& sorted_h, std::int64_t n) {
  auto it = std::upper_bound(sorted_h.begin(), sorted_h.end(), n);
  return static_cast<double>(sorted_h.end() - it) /
         static_cast<double>(sorted_h.size());
}

// Least-squares slope of log survival against log n over the grid; points
// with zero survival are skipped.
double loglog_slope(const std::vector<std::int64_t>& sorted_h,
                    const std::vector<std::int64_t>& grid) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::int64_t g : grid) {
    double s = survival_of_sample(sorted_h, g);
    if (s <= 0.0) continue;
    double x = std::log(static_cast<double>(g));
    double y = std::log(s);
    n += 1; sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TailReport tail_report(const FirstTimeDistribution& dist, std::uint64_t seed) {
  TailReport rep;
  rep.schedule = geometric_schedule(dist.horizon);
  for (std::int64_t n : rep.schedule) {
    rep.survival.push_back(dist.survival(n));
    rep.truncated_mean.push_back(dist.truncated_mean(n));
  }
  if (dist.histogram.empty() || dist.sample_size == 0) return rep;

  // Flatten the sample; censored points re-enter as horizon + 1 so they
  // count in every survival evaluation at n <= horizon.
  std::vector<std::int64_t> sample;
  sample.reserve(static_cast<std::size_t>(dist.sample_size));
  for (const auto& [k, c] : dist.histogram) {
    sample.insert(sample.end(), static_cast<std::size_t>(c), k);
  }
  sample.insert(sample.end(), static_cast<std::size_t>(dist.censored),
                dist.horizon + 1);

  std::int64_t n_hi = dist.histogram.rbegin()->first;
  std::int64_t n_lo = std::max<std::int64_t>(1, n_hi / 10);
  for (const auto& [k, c] : dist.histogram) {
    if (k >= n_lo && k <= n_hi) rep.fit_points += c;
  }
  rep.fit_ok = rep.fit_points >= 200;

  std::vector<std::int64_t> grid;
  const int grid_n = 20;
  double lratio = std::log(static_cast<double>(n_hi) / static_cast<double>(n_lo)) /
                  (grid_n - 1);
  for (int i = 0; i < grid_n; ++i) {
    auto g = static_cast<std::int64_t>(
        std::llround(static_cast<double>(n_lo) * std::exp(lratio * i)));
    if (grid.empty() || g > grid.back()) grid.push_back(g);
  }

  rep.slope = loglog_slope(sample, grid);

  std::mt19937_64 eng(seed);
  const int resamples = 200;
  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<std::int64_t> boot(sample.size());
  for (int rs = 0; rs < resamples; ++rs) {
    for (auto& v : boot) {
      v = sample[static_cast<std::size_t>(eng() % sample.size())];
    }
    std::sort(boot.begin(), boot.end());
    slopes.push_back(loglog_slope(boot, grid));
  }
  std::sort(slopes.begin(), slopes.end());
  rep.slope_ci_lo = slopes[static_cast<std::size_t>(resamples * 0.025)];
  rep.slope_ci_hi = slopes[static_cast<std::size_t>(resamples * 0.975) - 1];
  return rep;
}

}  // namespace hyptimes
