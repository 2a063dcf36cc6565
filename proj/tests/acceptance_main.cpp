// Acceptance gate for the committed configuration.  Prints one PASS/FAIL
// line per criterion and exits with the number of failures.  Pass the
// config path as argv[1]; defaults to configs/default.json relative to the
// working directory.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hyptimes/analysis.hpp"
#include "hyptimes/detect.hpp"
#include "hyptimes/maps.hpp"
#include "hyptimes/orbit.hpp"
#include "hyptimes/runner.hpp"
#include "hyptimes/ulam.hpp"

using namespace hyptimes;
namespace fs = std::filesystem;

namespace {

OrbitTrace synthetic_trace(std::vector<double> a, std::vector<double> r,
                           double delta) {
  OrbitTrace t;
  t.a = std::move(a);
  t.r = std::move(r);
  t.x.assign(t.a.size() + 1, CirclePoint{0.5});
  t.delta = delta;
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool detector_equivalence(std::string& d) {
  HyperbolicParams p(std::exp(-0.345), 0.25, 0.25, 0.5);
  std::int64_t mismatches = 0;

  // Quantized traces sampled from the full {-1,-0.1,0.1} x {-2,0} cube up
  // to length 12; levels straddle log sigma so every tie pattern occurs.
  std::mt19937_64 eng(20260101);
  const double av[3] = {-1.0, -0.1, 0.1};
  const double rv[2] = {-2.0, 0.0};
  for (int c = 0; c < 100000; ++c) {
    int n = 1 + static_cast<int>(eng() % 12);
    std::vector<double> a(static_cast<std::size_t>(n));
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = av[eng() % 3];
      r[static_cast<std::size_t>(i)] = rv[eng() % 2];
    }
    OrbitTrace t = synthetic_trace(std::move(a), std::move(r), 0.25);
    if (detect_brute(t, p).times != detect_fast(t, p).times) mismatches += 1;
  }

  std::mt19937_64 eng2(20260102);
  std::uniform_real_distribution<double> ua(-1.0, 0.5);
  std::uniform_real_distribution<double> ur(-3.0, 0.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> a(200), r(200);
    for (int i = 0; i < 200; ++i) {
      a[static_cast<std::size_t>(i)] = ua(eng2);
      r[static_cast<std::size_t>(i)] = u01(eng2) < 0.5 ? 0.0 : ur(eng2);
    }
    OrbitTrace t = synthetic_trace(std::move(a), std::move(r), 0.25);
    if (detect_brute(t, p).times != detect_fast(t, p).times) mismatches += 1;
  }

  d = "mismatches=" + std::to_string(mismatches) + " over 101000 traces";
  return mismatches == 0;
}

bool transfer_identity(std::string& d) {
  const IntermittentCircleMap& imap = intermittent_map();
  auto one = [](CirclePoint) { return 1.0; };
  double worst = 0.0;
  for (CirclePoint x : ensemble_points({EnsembleSpec::Kind::kGrid, 10000, 0})) {
    worst = std::max(worst, std::fabs(transfer_apply(imap, one, x) - 1.0));
  }
  d = "max |T1 - 1| = " + num(worst) + " at 10000 grid points";
  return worst <= 1e-12;
}

bool uniform_fixed_point(std::string& d) {
  const int K = 4096;
  UlamOperator P = build_ulam_exact(intermittent_map(), K);
  std::vector<double> u(static_cast<std::size_t>(K), 1.0 / K);
  std::vector<double> v = P.apply_left(u);
  double l1 = 0.0;
  for (int i = 0; i < K; ++i) {
    l1 += std::fabs(v[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(i)]);
  }
  InvariantDensityResult inv = invariant_density(P);
  double sup = 0.0;
  for (int i = 0; i < K; ++i) {
    sup = std::max(sup, std::fabs(inv.density.density(i) - 1.0));
  }
  d = "L1(uniform P, uniform) = " + num(l1) + ", sup |rho - 1| = " + num(sup);
  return l1 <= 1e-10 && inv.converged && sup <= 0.02;
}

bool lyapunov_integral(const ExperimentConfig& cfg, std::string& d) {
  const MapSystem& map = map_by_name(cfg.map_name);
  IntegralEstimate q = lyapunov_integral_quadrature(map, 1e-9);
  EnsembleMean em = lyapunov_integral_ensemble(
      map, {EnsembleSpec::Kind::kRandom, 10000, cfg.ensemble.seed + 2}, 100000);
  d = "quadrature = " + num(q.value) + ", ensemble = " + num(em.mean);
  return q.converged && std::fabs(q.value + 0.5) <= 1e-6 &&
         std::fabs(em.mean + 0.5) <= 0.02;
}

bool log_dist_moments(std::string& d) {
  const IntermittentCircleMap& imap = intermittent_map();
  double err1 = 0.0;
  double worst_refine = 0.0;
  bool ok = true;
  for (int p : {1, 2, 4, 8}) {
    IntegralEstimate est = log_dist_moment(imap, p);
    ok = ok && est.converged && std::isfinite(est.value);
    double refine =
        std::fabs(est.value - est.coarse_value) / std::max(1.0, std::fabs(est.value));
    worst_refine = std::max(worst_refine, refine);
    if (p == 1) err1 = std::fabs(est.value - (1.0 + std::log(2.0)));
  }
  d = "p=1 error = " + num(err1) + ", worst refinement drift = " + num(worst_refine);
  return ok && err1 <= 1e-6 && worst_refine <= 1e-6;
}

bool recurrence_suite(std::string& d) {
  std::vector<double> starts = {0.25};
  for (int i = 0; i < 100; ++i) starts.push_back(0.5 * (i + 0.5) / 100.0);
  double max_identity = 0.0;
  double min_ratio = 1e300;
  int bad = 0;
  for (double x1 : starts) {
    RecurrenceSequenceReport rep = recurrence_sequence_report(x1, 1000000);
    if (!rep.upper_bound_ok || !rep.increment_bound_ok || !rep.harmonic_bound_ok) {
      bad += 1;
    }
    max_identity = std::max(max_identity, rep.max_increment_identity_error);
    min_ratio = std::min(min_ratio, rep.final_growth_ratio);
  }
  d = "bad starts = " + std::to_string(bad) +
      ", max identity error = " + num(max_identity) +
      ", min S_N/ln N = " + num(min_ratio);
  return bad == 0 && max_identity <= 1e-14 && min_ratio >= 0.0625;
}

bool firsttime_growth(const ExperimentConfig& cfg, std::string& d) {
  const MapSystem& map = map_by_name(cfg.map_name);
  HyperbolicParams p = cfg.params();
  FirstTimeDistribution dist = first_time_distribution(
      map, {EnsembleSpec::Kind::kRandom, 10000, cfg.ensemble.seed + 1}, p, 100000);
  double m3 = dist.truncated_mean(1000);
  double m4 = dist.truncated_mean(10000);
  double m5 = dist.truncated_mean(100000);

  HyperbolicParams pd(0.5, 0.5, 0.25, 0.5);
  FirstTimeDistribution dd = first_time_distribution(
      map_by_name("doubling"), {EnsembleSpec::Kind::kRandom, 1000, 11}, pd, 100);
  bool unit = dd.histogram.size() == 1 && dd.histogram.count(1) == 1 &&
              dd.histogram.at(1) == 1000 && dd.censored == 0;

  d = "E[min(h,n)] = " + num(m3) + " / " + num(m4) + " / " + num(m5) +
      " at n = 1e3/1e4/1e5; doubling h==1: " + (unit ? "yes" : "no");
  return m4 >= 1.10 * m3 && m5 >= 1.10 * m4 && unit;
}

bool frequency_coverage(const ExperimentConfig& cfg, std::string& d) {
  const MapSystem& map = map_by_name(cfg.map_name);
  FrequencyReport rep =
      frequency_report(map, {cfg.ensemble.kind, 1000, cfg.ensemble.seed},
                       cfg.params(), {100000}, {cfg.theta});
  double frac = rep.fraction_at.at(0).at(0);
  d = "fraction with frequency >= " + num(cfg.theta) + ": " + num(frac);
  return frac >= 0.95;
}

bool contraction_distortion(const ExperimentConfig& cfg, std::string& d) {
  const MapSystem& map = map_by_name(cfg.map_name);
  HyperbolicParams p = cfg.params();
  std::int64_t violations = 0, pairs = 0, discarded = 0;
  std::int64_t dec1 = 0, dec2 = 0, dec3 = 0;  // times in [10,100), [100,1000), {1000}
  double max_log_ratio = 0.0;
  for (CirclePoint x0 :
       ensemble_points({EnsembleSpec::Kind::kRandom, 100, cfg.ensemble.seed + 5})) {
    OrbitTrace trace;
    try {
      trace = generate_orbit(map, x0, 1000, p.delta);
    } catch (const PartialTraceError&) {
      continue;
    } catch (const std::invalid_argument&) {
      continue;
    }
    DetectionResult det = detect_fast(trace, p);
    ContractionReport cr = contraction_check(map, trace, det, p, 1000);
    DistortionReport dr = distortion_check(map, trace, det, p, 1000);
    violations += cr.violations;
    pairs += cr.pairs_checked;
    discarded += cr.pairs_discarded;
    max_log_ratio = std::max(max_log_ratio, dr.max_log_ratio);
    for (std::int64_t n : det.times) {
      if (n >= 10 && n < 100) dec1 += 1;
      else if (n >= 100 && n < 1000) dec2 += 1;
      else if (n == 1000) dec3 += 1;
    }
  }
  d = "violations = " + std::to_string(violations) + " over " +
      std::to_string(pairs) + " pairs, C1_hat = " + num(std::exp(max_log_ratio)) +
      ", times per decade " + std::to_string(dec1) + "/" + std::to_string(dec2) +
      "/" + std::to_string(dec3);
  return violations == 0 && pairs >= 1000 && std::exp(max_log_ratio) <= 1.5 &&
         dec1 >= 100 && dec2 >= 100 && dec3 >= 10;
}

bool pushforward_bounded(const ExperimentConfig& cfg, std::string& d) {
  const MapSystem& map = map_by_name(cfg.map_name);
  std::vector<EmpiricalDensity> dens = pushforward_restricted(
      map, {EnsembleSpec::Kind::kRandom, 100000, cfg.ensemble.seed + 3},
      cfg.params(), {10, 100, 1000}, 128);
  double sup_max = 0.0, sup_min = 1e300;
  bool mass_ok = true;
  for (const EmpiricalDensity& e : dens) {
    sup_max = std::max(sup_max, e.sup_density());
    sup_min = std::min(sup_min, e.sup_density());
    mass_ok = mass_ok && e.total_mass() > 0.0;
  }
  d = "sup density range [" + num(sup_min) + ", " + num(sup_max) + "] at n = 10/100/1000";
  return mass_ok && sup_max <= 2.0 && sup_max <= 2.0 * sup_min;
}

bool rerun_identical(const ExperimentConfig& cfg, std::string& d) {
  fs::path dir_a = fs::temp_directory_path() / "hyptimes_acceptance_a";
  fs::path dir_b = fs::temp_directory_path() / "hyptimes_acceptance_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  setenv(kOutputDirEnvVar, dir_a.c_str(), 1);
  RunResult a = run_config(cfg);
  setenv(kOutputDirEnvVar, dir_b.c_str(), 1);
  RunResult b = run_config(cfg);
  unsetenv(kOutputDirEnvVar);

  bool identical = a.artifacts.size() == b.artifacts.size();
  for (std::size_t i = 0; identical && i < a.artifacts.size(); ++i) {
    identical = a.artifacts[i].filename() == b.artifacts[i].filename() &&
                slurp(a.artifacts[i]) == slurp(b.artifacts[i]);
  }
  d = std::to_string(a.artifacts.size()) + " artifacts, " +
      std::to_string(a.failures) + " failing config checks";
  return identical && !a.artifacts.empty() && a.failures == b.failures &&
         a.failures == 0;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path config_path = argc > 1 ? argv[1] : "configs/default.json";

  ExperimentConfig cfg;
  bool have_cfg = true;
  std::string cfg_err;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    have_cfg = false;
    cfg_err = e.what();
  }
  std::printf("acceptance: config %s (%s)\n", config_path.string().c_str(),
              have_cfg ? "loaded" : "UNAVAILABLE");

  struct Criterion {
    const char* name;
    bool needs_config;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {"detector agrees with the reference scan on exhaustive and random traces",
       false, [&](std::string& d) { return detector_equivalence(d); }},
      {"transfer operator fixes the constant function", false,
       [&](std::string& d) { return transfer_identity(d); }},
      {"uniform density is fixed by the exact partition operator", false,
       [&](std::string& d) { return uniform_fixed_point(d); }},
      {"Lyapunov integral is -1/2 by quadrature and orbit ensemble", true,
       [&](std::string& d) { return lyapunov_integral(cfg, d); }},
      {"log-distance moments match the closed forms and refine stably", false,
       [&](std::string& d) { return log_dist_moments(d); }},
      {"inverse-branch recurrence sequence obeys its per-step and sum bounds",
       false, [&](std::string& d) { return recurrence_suite(d); }},
      {"truncated mean of the first hyperbolic time grows every decade", true,
       [&](std::string& d) { return firsttime_growth(cfg, d); }},
      {"committed frequency threshold is met by at least 95% of points", true,
       [&](std::string& d) { return frequency_coverage(cfg, d); }},
      {"backward contraction and bounded distortion hold at detected times", true,
       [&](std::string& d) { return contraction_distortion(cfg, d); }},
      {"pushforward densities restricted to detected times stay bounded", true,
       [&](std::string& d) { return pushforward_bounded(cfg, d); }},
      {"full default configuration reruns byte-identically", true,
       [&](std::string& d) { return rerun_identical(cfg, d); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    bool ok = false;
    std::string detail;
    if (criteria[i].needs_config && !have_cfg) {
      detail = "config unavailable: " + cfg_err;
    } else {
      try {
        ok = criteria[i].fn(detail);
      } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
        ok = false;
      }
    }
    std::printf("%s  %2zu  %s  [%s]\n", ok ? "PASS" : "FAIL", i + 1,
                criteria[i].name, detail.c_str());
    std::fflush(stdout);
    if (!ok) failures += 1;
  }
  std::printf("%d/11 criteria passed\n", 11 - failures);
  return failures;
}
