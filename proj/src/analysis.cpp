#include "hyptimes/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hyptimes/compensated.hpp"

namespace hyptimes {

namespace {

// Circularly ordered exceptional coordinates with the wrap-around gap
// closed by repeating the first point shifted one turn.
std::vector<double> sorted_exceptional(const MapSystem& map) {
  std::vector<double> s;
  for (CirclePoint q : map.exceptional_set()) s.push_back(q.coord);
  std::sort(s.begin(), s.end());
  return s;
}

double integrand_log_inv_deriv(const MapSystem& map, double coord) {
  return map.log_inv_deriv_norm(wrap(coord));
}

// One resolution level of the singular quadrature for log ||Df^{-1}||.
double lyapunov_once(const MapSystem& map, double tol, std::int64_t* evals,
                     bool* converged) {
  std::vector<double> s = sorted_exceptional(map);
  CompensatedSum total;
  if (s.empty()) {
    total.add(adaptive_simpson(
        [&](double x) { return integrand_log_inv_deriv(map, x); }, -1.0, 1.0, tol,
        evals, converged));
    return 0.5 * total.value();
  }
  const double eps = 1e-9;
  const double tail_factor = eps * std::log(eps) - eps;  // integral of log over (0,eps]
  for (std::size_t i = 0; i < s.size(); ++i) {
    double lo = s[i];
    double hi = i + 1 < s.size() ? s[i + 1] : s[0] + 2.0;
    // Local log-slope at each singular endpoint; zero when the observable
    // stays bounded there.
    double kappa_lo = integrand_log_inv_deriv(map, lo + eps) / std::log(eps);
    double kappa_hi = integrand_log_inv_deriv(map, hi - eps) / std::log(eps);
    total.add(kappa_lo * tail_factor);
    total.add(kappa_hi * tail_factor);
    total.add(adaptive_simpson(
        [&](double x) { return integrand_log_inv_deriv(map, x); }, lo + eps, hi - eps,
        tol, evals, converged));
  }
  return 0.5 * total.value();
}

}  // namespace

IntegralEstimate lyapunov_integral_quadrature(const MapSystem& map, double tol) {
  IntegralEstimate est;
  est.value = lyapunov_once(map, tol, &est.evals, &est.converged);
  est.coarse_value = lyapunov_once(map, tol * 16.0, nullptr, nullptr);
  return est;
}

EnsembleMean lyapunov_integral_ensemble(const MapSystem& map,
                                        const EnsembleSpec& ensemble,
                                        std::int64_t horizon) {
  if (horizon <= 0) throw std::invalid_argument("lyapunov ensemble: horizon <= 0");
  EnsembleMean out;
  CompensatedSum grand;
  for (CirclePoint x0 : ensemble_points(ensemble)) {
    CompensatedSum orbit_sum;
    CirclePoint x = x0;
    bool ok = true;
    for (std::int64_t j = 0; j < horizon; ++j) {
      if (map.dist_to_S(x) <= kExceptionalGuard) {
        ok = false;
        break;
      }
      orbit_sum.add(map.log_inv_deriv_norm(x));
      x = map.eval(x);
    }
    if (!ok) {
      out.dropped_on_s += 1;
      continue;
    }
    out.used += 1;
    grand.add(orbit_sum.value() / static_cast<double>(horizon));
  }
  out.mean = out.used > 0 ? grand.value() / static_cast<double>(out.used) : 0.0;
  return out;
}

namespace {

double moment_once(const MapSystem& map, double p, std::optional<double> delta_trunc,
                   double tol, std::int64_t* evals, bool* converged) {
  std::vector<double> s = sorted_exceptional(map);
  if (s.empty()) return 0.0;  // dist identically 1, integrand identically 0
  double delta = delta_trunc.value_or(2.0);

  // Inside a gap between adjacent exceptional points, dist(., S) at arc
  // offset u from either endpoint is exactly min(u, gap - u); working in
  // the offset avoids the cancellation of computing 1 - |x| near the
  // circle point +-1, which (-log d)^p amplifies catastrophically.  Each
  // side of a gap contributes the integral over (0, span] of (-log u)^p du:
  // a closed-form inner tail plus, under u = e^{-t}, the bounded t^p e^{-t}.
  CompensatedSum total;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double lo = s[i];
    double hi = i + 1 < s.size() ? s[i + 1] : s[0] + 2.0;
    double halfgap = 0.5 * (hi - lo);
    double span = std::min(halfgap, delta);  // beyond: integrand is zero
    double eps = std::min(1e-8, span / 8.0);
    double side = log_power_tail(p, eps) +
                  adaptive_simpson(
                      [p](double t) { return std::pow(t, p) * std::exp(-t); },
                      -std::log(span), -std::log(eps), tol, evals, converged);
    total.add(side);
    total.add(side);
  }
  return 0.5 * total.value();
}

}  // namespace

IntegralEstimate log_dist_moment(const MapSystem& map, double p,
                                 std::optional<double> delta_trunc, double tol) {
  if (!(p >= 1.0)) throw std::invalid_argument("log_dist_moment: need p >= 1");
  if (delta_trunc && (!(*delta_trunc > 0.0) || *delta_trunc > 1.0)) {
    throw std::invalid_argument("log_dist_moment: truncation outside (0, 1]");
  }
  IntegralEstimate est;
  est.value = moment_once(map, p, delta_trunc, tol, &est.evals, &est.converged);
  est.coarse_value = moment_once(map, p, delta_trunc, tol * 16.0, nullptr, nullptr);
  return est;
}

std::vector<double> recurrence_sequence(double x1, std::int64_t n) {
  if (!(x1 > 0.0) || !(x1 < 0.5)) {
    throw std::invalid_argument("recurrence_sequence: need x1 in (0, 1/2)");
  }
  if (n <= 0) throw std::invalid_argument("recurrence_sequence: n <= 0");
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(n));
  double x = x1;
  for (std::int64_t i = 0; i < n; ++i) {
    xs.push_back(x);
    double u = (1.0 + x) / 2.0;
    x = u * u;
  }
  return xs;
}

RecurrenceSequenceReport recurrence_sequence_report(double x1, std::int64_t n) {
  if (!(x1 > 0.0) || !(x1 < 0.5)) {
    throw std::invalid_argument("recurrence_sequence_report: need x1 in (0, 1/2)");
  }
  if (n <= 0) throw std::invalid_argument("recurrence_sequence_report: n <= 0");

  RecurrenceSequenceReport rep;
  rep.x1 = x1;
  rep.n = n;

  std::int64_t next_checkpoint = 10;
  CompensatedSum s_sum;   // sum of k (x_{k+1} - x_k)
  CompensatedSum h_sum;   // harmonic numbers
  double x = x1;
  for (std::int64_t k = 1; k <= n; ++k) {
    double dk = static_cast<double>(k);
    if (rep.upper_bound_ok && x > 1.0 - 1.0 / (2.0 * dk)) {
      rep.upper_bound_ok = false;
      rep.upper_bound_first_fail = k;
    }
    double u = (1.0 + x) / 2.0;
    double x_next = u * u;
    double inc = x_next - x;
    double w = (1.0 - x) / 2.0;
    rep.max_increment_identity_error =
        std::max(rep.max_increment_identity_error, std::fabs(inc - w * w));
    if (rep.increment_bound_ok && inc < 1.0 / (16.0 * dk * dk) - 1e-16) {
      rep.increment_bound_ok = false;
      rep.increment_bound_first_fail = k;
    }
    s_sum.add(dk * inc);
    h_sum.add(1.0 / dk);
    if (rep.harmonic_bound_ok && s_sum.value() < h_sum.value() / 16.0) {
      rep.harmonic_bound_ok = false;
      rep.harmonic_bound_first_fail = k;
    }
    if (k == next_checkpoint || k == n) {
      rep.checkpoints.push_back(k);
      rep.partial_sum.push_back(s_sum.value());
      rep.growth_ratio.push_back(s_sum.value() / std::log(dk));
      if (k == next_checkpoint) next_checkpoint *= 10;
    }
    x = x_next;
  }
  rep.final_partial_sum = s_sum.value();
  rep.final_growth_ratio = rep.final_partial_sum / std::log(static_cast<double>(n));
  return rep;
}

namespace {

// Pulls the pair (y, z) back along the branch itinerary of the recorded
// orbit.  Returns false (discard) if either point leaves the branch cell
// of the orbit at any step.
bool pullback_chain(const MapSystem& map, const OrbitTrace& trace, std::int64_t n,
                    CirclePoint y, CirclePoint z, std::vector<CirclePoint>& ys,
                    std::vector<CirclePoint>& zs) {
  auto bucket = [](CirclePoint q) { return q.coord >= 0.0; };
  ys.assign(static_cast<std::size_t>(n) + 1, CirclePoint{});
  zs.assign(static_cast<std::size_t>(n) + 1, CirclePoint{});
  ys[static_cast<std::size_t>(n)] = y;
  zs[static_cast<std::size_t>(n)] = z;
  if (bucket(y) != bucket(trace.x[static_cast<std::size_t>(n)]) ||
      bucket(z) != bucket(trace.x[static_cast<std::size_t>(n)])) {
    return false;
  }
  for (std::int64_t j = n; j >= 1; --j) {
    CirclePoint ref = trace.x[static_cast<std::size_t>(j - 1)];
    CirclePoint yp = map.pullback(ys[static_cast<std::size_t>(j)], ref);
    CirclePoint zp = map.pullback(zs[static_cast<std::size_t>(j)], ref);
    if (bucket(yp) != bucket(ref) || bucket(zp) != bucket(ref)) return false;
    ys[static_cast<std::size_t>(j - 1)] = yp;
    zs[static_cast<std::size_t>(j - 1)] = zp;
  }
  return true;
}

}  // namespace

ContractionReport contraction_check(const MapSystem& map, const OrbitTrace& trace,
                                    const DetectionResult& det,
                                    const HyperbolicParams& p, std::int64_t n_max,
                                    int pairs, double arc_radius) {
  ContractionReport rep;
  std::vector<CirclePoint> ys, zs;
  for (std::int64_t n : det.times) {
    if (n > n_max || n > trace.steps()) break;
    CirclePoint xn = trace.x[static_cast<std::size_t>(n)];
    for (int q = 1; q <= pairs; ++q) {
      double rho = arc_radius * q / pairs;
      CirclePoint y = wrap(xn.coord + rho);
      CirclePoint z = wrap(xn.coord - rho);
      if (!pullback_chain(map, trace, n, y, z, ys, zs)) {
        rep.pairs_discarded += 1;
        continue;
      }
      rep.pairs_checked += 1;
      double end_gap = geo_dist(y, z);
      for (std::int64_t k = 1; k < n; ++k) {
        double bound = std::pow(p.sigma, 0.5 * static_cast<double>(k)) * end_gap;
        double gap = geo_dist(ys[static_cast<std::size_t>(n - k)],
                              zs[static_cast<std::size_t>(n - k)]);
        if (gap > bound) rep.violations += 1;
        if (bound > 0.0) {
          rep.worst_margin = std::min(rep.worst_margin, (bound - gap) / bound);
        }
      }
    }
  }
  return rep;
}

DistortionReport distortion_check(const MapSystem& map, const OrbitTrace& trace,
                                  const DetectionResult& det,
                                  const HyperbolicParams& p, std::int64_t n_max,
                                  int pairs, double arc_radius) {
  (void)p;
  DistortionReport rep;
  std::vector<CirclePoint> ys, zs;
  for (std::int64_t n : det.times) {
    if (n > n_max || n > trace.steps()) break;
    CirclePoint xn = trace.x[static_cast<std::size_t>(n)];
    for (int q = 1; q <= pairs; ++q) {
      double rho = arc_radius * q / pairs;
      CirclePoint y = wrap(xn.coord + rho);
      CirclePoint z = wrap(xn.coord - rho);
      if (!pullback_chain(map, trace, n, y, z, ys, zs)) {
        rep.pairs_discarded += 1;
        continue;
      }
      rep.pairs_checked += 1;
      CompensatedSum diff;  // log |det Df^n(y)| - log |det Df^n(z)|
      for (std::int64_t j = 0; j < n; ++j) {
        diff.add(map.log_abs_det(ys[static_cast<std::size_t>(j)]) -
                 map.log_abs_det(zs[static_cast<std::size_t>(j)]));
      }
      rep.max_log_ratio = std::max(rep.max_log_ratio, std::fabs(diff.value()));
    }
  }
  rep.c1_hat = std::exp(rep.max_log_ratio);
  return rep;
}

BirkhoffNegativityReport birkhoff_negativity(const OrbitTrace& trace,
                                             const DetectionResult& det,
                                             const HyperbolicParams& p) {
  BirkhoffNegativityReport rep;
  rep.worst_mean = -1e300;
  CompensatedSum prefix;
  std::size_t next = 0;
  for (std::int64_t n = 1; n <= trace.steps() && next < det.times.size(); ++n) {
    prefix.add(trace.a[static_cast<std::size_t>(n - 1)]);
    if (det.times[next] != n) continue;
    next += 1;
    rep.times_checked += 1;
    // Same arithmetic as the scanner: T_n = S_n - n log sigma <= 0.
    double t = prefix.value() - static_cast<double>(n) * p.log_sigma;
    if (t > p.tie_tolerance) rep.violations += 1;
    rep.worst_mean =
        std::max(rep.worst_mean, prefix.value() / static_cast<double>(n));
  }
  if (rep.times_checked == 0) rep.worst_mean = 0.0;
  return rep;
}

SlowRecurrenceProfile slow_recurrence_profile(const MapSystem& map,
                                              const EnsembleSpec& ensemble,
                                              const std::vector<std::int64_t>& ks,
                                              const std::vector<double>& deltas,
                                              std::int64_t horizon) {
  if (ks.size() != deltas.size() || ks.empty()) {
    throw std::invalid_argument("slow_recurrence_profile: bad schedule");
  }
  if (horizon <= 0) throw std::invalid_argument("slow_recurrence_profile: horizon");
  SlowRecurrenceProfile prof;
  prof.k = ks;
  prof.delta_k = deltas;

  std::vector<std::int64_t> exceed(ks.size(), 0);
  std::vector<CompensatedSum> sums(ks.size());
  for (CirclePoint x0 : ensemble_points(ensemble)) {
    for (auto& s : sums) s.reset();
    CirclePoint x = x0;
    bool ok = true;
    for (std::int64_t j = 0; j < horizon; ++j) {
      double d = map.dist_to_S(x);
      if (d <= kExceptionalGuard) {
        ok = false;
        break;
      }
      double neg_log = -std::log(d);
      for (std::size_t q = 0; q < deltas.size(); ++q) {
        if (d <= deltas[q]) sums[q].add(neg_log);
      }
      x = map.eval(x);
    }
    if (!ok) {
      prof.dropped_on_s += 1;
      continue;
    }
    prof.sample_size += 1;
    for (std::size_t q = 0; q < ks.size(); ++q) {
      double phi = sums[q].value() / static_cast<double>(horizon);
      if (phi > 1.0 / static_cast<double>(ks[q])) exceed[q] += 1;
    }
  }
  for (std::size_t q = 0; q < ks.size(); ++q) {
    double mass = prof.sample_size > 0
                      ? static_cast<double>(exceed[q]) / prof.sample_size
                      : 0.0;
    double bound = std::pow(2.0, -static_cast<double>(ks[q] + 1));
    prof.mass.push_back(mass);
    prof.bound.push_back(bound);
    prof.within_bound.push_back(mass <= bound);
  }
  return prof;
}

std::vector<double> slow_recurrence_schedule(const MapSystem& map,
                                             const std::vector<std::int64_t>& ks) {
  std::vector<double> deltas;
  for (std::int64_t k : ks) {
    if (k <= 0) throw std::invalid_argument("slow_recurrence_schedule: k <= 0");
    double target =
        1.0 / (static_cast<double>(k) * std::pow(2.0, static_cast<double>(k + 1)));
    double lo = 1e-12, hi = 0.5;
    for (int it = 0; it < 60; ++it) {
      double mid = std::sqrt(lo * hi);  // log-scale bisection
      double moment = log_dist_moment(map, 1.0, mid, 1e-11).value;
      if (moment <= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    deltas.push_back(lo);
  }
  return deltas;
}

}  // namespace hyptimes
