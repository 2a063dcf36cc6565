#include "hyptimes/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "hyptimes/analysis.hpp"
#include "hyptimes/io.hpp"
#include "hyptimes/maps.hpp"
#include "hyptimes/ulam.hpp"

namespace hyptimes {

HyperbolicParams ExperimentConfig::params() const {
  return HyperbolicParams(sigma, delta, b, beta);
}

namespace {

using nlohmann::json;

// Seed offsets decorrelate the per-experiment ensembles drawn from the one
// configured seed.
constexpr std::uint64_t kSeedFirsttime = 1;
constexpr std::uint64_t kSeedLyapunov = 2;
constexpr std::uint64_t kSeedPushforward = 3;
constexpr std::uint64_t kSeedSlowRecurrence = 4;
constexpr std::uint64_t kSeedContraction = 5;
constexpr std::uint64_t kSeedEquivalence = 6;
constexpr std::uint64_t kSeedTransfer = 7;
constexpr std::uint64_t kSeedRerun = 8;
constexpr std::uint64_t kSeedBootstrap = 9;

// Pinned after pilot runs of the committed configuration; measured values
// sit well inside.
constexpr double kDistortionBound = 1.5;
constexpr double kPushforwardSupBound = 2.0;
constexpr double kPushforwardMinMass = 0.1;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "map",          "sigma",
      "delta",        "b",
      "beta",         "theta",
      "horizon",      "ensemble",
      "output_dir",   "experiments",
      "firsttime_size", "ulam_k",
      "lyapunov_ensemble_size", "pushforward_size",
      "pushforward_k", "pushforward_ns",
      "sequence_n",   "sequence_grid",
      "slow_recurrence_size", "slow_recurrence_kmax",
      "contraction_n_max", "contraction_targets"};
  return keys;
}

std::optional<double> read_number(const json& j, const char* key, bool required,
                                  std::vector<std::string>& errs) {
  if (!j.contains(key)) {
    if (required) errs.push_back(std::string(key) + ": missing required number");
    return std::nullopt;
  }
  const json& v = j.at(key);
  if (!v.is_number()) {
    errs.push_back(std::string(key) + ": expected a number");
    return std::nullopt;
  }
  return v.get<double>();
}

std::optional<std::int64_t> read_integer(const json& j, const char* key, bool required,
                                         std::int64_t min_value,
                                         std::vector<std::string>& errs) {
  if (!j.contains(key)) {
    if (required) errs.push_back(std::string(key) + ": missing required integer");
    return std::nullopt;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    errs.push_back(std::string(key) + ": expected an integer");
    return std::nullopt;
  }
  auto x = v.get<std::int64_t>();
  if (x < min_value) {
    errs.push_back(std::string(key) + ": must be >= " + std::to_string(min_value));
    return std::nullopt;
  }
  return x;
}

std::optional<std::string> read_string(const json& j, const char* key, bool required,
                                       std::vector<std::string>& errs) {
  if (!j.contains(key)) {
    if (required) errs.push_back(std::string(key) + ": missing required string");
    return std::nullopt;
  }
  const json& v = j.at(key);
  if (!v.is_string()) {
    errs.push_back(std::string(key) + ": expected a string");
    return std::nullopt;
  }
  return v.get<std::string>();
}

ExperimentConfig parse_config(const std::filesystem::path& path,
                              std::vector<std::string>& errs) {
  ExperimentConfig cfg;
  json j;
  {
    std::ifstream in(path);
    if (!in) {
      errs.push_back("cannot open " + path.string());
      return cfg;
    }
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      errs.push_back(std::string("parse error: ") + e.what());
      return cfg;
    }
  }
  if (!j.is_object()) {
    errs.push_back("top level: expected an object");
    return cfg;
  }
  for (const auto& item : j.items()) {
    if (known_keys().count(item.key()) == 0) {
      errs.push_back("unknown key: " + item.key());
    }
  }

  if (auto v = read_string(j, "map", false, errs)) {
    cfg.map_name = *v;
    if (cfg.map_name != "intermittent" && cfg.map_name != "doubling") {
      errs.push_back("map: unknown map '" + cfg.map_name + "'");
    }
  }

  auto sigma = read_number(j, "sigma", true, errs);
  auto delta = read_number(j, "delta", true, errs);
  auto b = read_number(j, "b", true, errs);
  auto beta = read_number(j, "beta", true, errs);
  auto theta = read_number(j, "theta", true, errs);
  if (sigma) cfg.sigma = *sigma;
  if (delta) cfg.delta = *delta;
  if (b) cfg.b = *b;
  if (beta) cfg.beta = *beta;
  if (theta) {
    cfg.theta = *theta;
    if (!(cfg.theta > 0.0) || cfg.theta > 1.0) {
      errs.push_back("theta: must lie in (0, 1]");
    }
  }
  if (sigma && delta && b && beta) {
    try {
      HyperbolicParams check(*sigma, *delta, *b, *beta);
      (void)check;
    } catch (const std::invalid_argument& e) {
      errs.push_back(e.what());
    }
  }

  if (auto v = read_integer(j, "horizon", false, 1, errs)) cfg.horizon = *v;

  if (!j.contains("ensemble")) {
    errs.push_back("ensemble: missing required object");
  } else if (!j.at("ensemble").is_object()) {
    errs.push_back("ensemble: expected an object");
  } else {
    const json& e = j.at("ensemble");
    for (const auto& item : e.items()) {
      if (item.key() != "kind" && item.key() != "size" && item.key() != "seed") {
        errs.push_back("ensemble: unknown key: " + item.key());
      }
    }
    if (auto kind = read_string(e, "kind", true, errs)) {
      if (*kind == "grid") {
        cfg.ensemble.kind = EnsembleSpec::Kind::kGrid;
      } else if (*kind == "random") {
        cfg.ensemble.kind = EnsembleSpec::Kind::kRandom;
      } else {
        errs.push_back("ensemble.kind: expected \"grid\" or \"random\"");
      }
    }
    if (auto size = read_integer(e, "size", true, 1, errs)) cfg.ensemble.size = *size;
    if (auto seed = read_integer(e, "seed", false, 0, errs)) {
      cfg.ensemble.seed = static_cast<std::uint64_t>(*seed);
    }
  }

  if (auto v = read_string(j, "output_dir", false, errs)) {
    if (v->empty()) {
      errs.push_back("output_dir: must be non-empty");
    } else {
      cfg.output_dir = *v;
    }
  }

  if (!j.contains("experiments")) {
    errs.push_back("experiments: missing required array");
  } else if (!j.at("experiments").is_array() || j.at("experiments").empty()) {
    errs.push_back("experiments: expected a non-empty array of names");
  } else {
    std::set<std::string> known;
    for (const ExperimentInfo& info : list_experiments()) known.insert(info.name);
    for (const json& v : j.at("experiments")) {
      if (!v.is_string()) {
        errs.push_back("experiments: entries must be strings");
        continue;
      }
      auto name = v.get<std::string>();
      if (known.count(name) == 0) {
        errs.push_back("experiments: unknown name '" + name + "'");
      }
      cfg.experiments.push_back(name);
    }
  }

  if (auto v = read_integer(j, "firsttime_size", false, 1, errs)) cfg.firsttime_size = *v;
  if (auto v = read_integer(j, "ulam_k", false, 2, errs)) cfg.ulam_k = static_cast<int>(*v);
  if (auto v = read_integer(j, "lyapunov_ensemble_size", false, 1, errs)) {
    cfg.lyapunov_ensemble_size = *v;
  }
  if (auto v = read_integer(j, "pushforward_size", false, 1, errs)) {
    cfg.pushforward_size = *v;
  }
  if (auto v = read_integer(j, "pushforward_k", false, 2, errs)) {
    cfg.pushforward_k = static_cast<int>(*v);
  }
  if (j.contains("pushforward_ns")) {
    const json& arr = j.at("pushforward_ns");
    if (!arr.is_array() || arr.empty()) {
      errs.push_back("pushforward_ns: expected a non-empty integer array");
    } else {
      cfg.pushforward_ns.clear();
      bool ok = true;
      for (const json& v : arr) {
        if (!v.is_number_integer()) {
          errs.push_back("pushforward_ns: entries must be integers");
          ok = false;
          break;
        }
        cfg.pushforward_ns.push_back(v.get<std::int64_t>());
      }
      if (ok) {
        for (std::size_t i = 0; i < cfg.pushforward_ns.size(); ++i) {
          if (cfg.pushforward_ns[i] < 1 ||
              (i > 0 && cfg.pushforward_ns[i] <= cfg.pushforward_ns[i - 1])) {
            errs.push_back("pushforward_ns: must be strictly increasing and >= 1");
            break;
          }
        }
      }
    }
  }
  if (auto v = read_integer(j, "sequence_n", false, 10, errs)) cfg.sequence_n = *v;
  if (auto v = read_integer(j, "sequence_grid", false, 1, errs)) {
    cfg.sequence_grid = static_cast<int>(*v);
  }
  if (auto v = read_integer(j, "slow_recurrence_size", false, 1, errs)) {
    cfg.slow_recurrence_size = *v;
  }
  if (auto v = read_integer(j, "slow_recurrence_kmax", false, 1, errs)) {
    if (*v > 40) {
      errs.push_back("slow_recurrence_kmax: must be <= 40");
    } else {
      cfg.slow_recurrence_kmax = static_cast<int>(*v);
    }
  }
  if (auto v = read_integer(j, "contraction_n_max", false, 2, errs)) {
    cfg.contraction_n_max = *v;
  }
  if (auto v = read_integer(j, "contraction_targets", false, 1, errs)) {
    cfg.contraction_targets = *v;
  }

  if (!cfg.pushforward_ns.empty() && cfg.pushforward_ns.back() > cfg.horizon) {
    errs.push_back("pushforward_ns: entries must not exceed horizon");
  }
  return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::vector<std::string> errs;
  ExperimentConfig cfg = parse_config(path, errs);
  if (!errs.empty()) {
    std::string msg = "invalid config " + path.string() + ":";
    for (const std::string& e : errs) msg += "\n  " + e;
    throw std::runtime_error(msg);
  }
  return cfg;
}

std::vector<std::string> validate_config_file(const std::filesystem::path& path) {
  std::vector<std::string> errs;
  parse_config(path, errs);
  return errs;
}

const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> infos = {
      {"detect",
       "per-point first hyperbolic times, counts and frequencies, plus a "
       "frequency sweep over horizons"},
      {"firsttime",
       "first-hyperbolic-time distribution with survival and truncated-mean "
       "schedules and a tail fit"},
      {"ulam",
       "transfer-operator discretization, invariant density, and pushforward "
       "densities restricted to the hyperbolic-time sets"},
      {"verify",
       "detector equivalence, transfer identity, Lyapunov integral, log-distance "
       "moments, recurrence sequence, slow-recurrence sets, contraction and "
       "distortion at hyperbolic times"},
      {"report",
       "aggregate summary JSON with measured value, threshold and pass flag "
       "per check"},
  };
  return infos;
}

namespace {

struct Ctx {
  const ExperimentConfig& config;
  const MapSystem& map;
  HyperbolicParams p;
  std::filesystem::path outdir;
  RunResult result;

  void entry(const std::string& name, double measured, double threshold,
             const std::string& relation) {
    SummaryEntry e;
    e.name = name;
    e.measured = measured;
    e.threshold = threshold;
    e.relation = relation;
    if (relation == "<=") {
      e.pass = measured <= threshold;
    } else if (relation == ">=") {
      e.pass = measured >= threshold;
    } else {
      throw std::logic_error("bad relation " + relation);
    }
    result.summary.push_back(std::move(e));
  }

  void artifact(const std::string& filename, const std::string& content) {
    std::filesystem::path full = outdir / filename;
    write_file_atomic(full, content);
    result.artifacts.push_back(full);
  }
};

std::vector<std::int64_t> geometric_horizons(std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> out;
  for (std::int64_t base = 1; base <= hi; base *= 10) {
    for (std::int64_t mult : {1, 2, 5}) {
      std::int64_t n = base * mult;
      if (n >= lo && n <= hi) out.push_back(n);
    }
  }
  if (out.empty() || out.back() != hi) out.push_back(hi);
  return out;
}

std::string build_detect_csv(const MapSystem& map, const HyperbolicParams& p,
                             const EnsembleSpec& ens, std::int64_t horizon) {
  CsvBuilder csv({"point_index", "x0", "first_time", "censored_flag",
                  "count_at_horizon", "frequency"});
  std::vector<CirclePoint> pts = ensemble_points(ens);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    OrbitTrace trace;
    bool dropped = false;
    try {
      trace = generate_orbit(map, pts[i], horizon, p.delta);
    } catch (const PartialTraceError&) {
      dropped = true;
    } catch (const std::invalid_argument&) {
      dropped = true;
    }
    if (dropped) {
      csv.add_row({csv.cell(static_cast<std::int64_t>(i)), csv.cell(pts[i].coord),
                   csv.cell(static_cast<std::int64_t>(-1)),
                   csv.cell(static_cast<std::int64_t>(2)),
                   csv.cell(static_cast<std::int64_t>(0)), csv.cell(0.0)});
      continue;
    }
    DetectionResult det = detect_fast(trace, p);
    std::int64_t first = det.first ? *det.first : -1;
    std::int64_t flag = det.first ? 0 : 1;
    csv.add_row({csv.cell(static_cast<std::int64_t>(i)), csv.cell(pts[i].coord),
                 csv.cell(first), csv.cell(flag), csv.cell(det.count_at(horizon)),
                 csv.cell(det.frequency_at(horizon))});
  }
  return csv.str();
}

void run_detect(Ctx& c) {
  c.artifact("detect.csv", build_detect_csv(c.map, c.p, c.config.ensemble,
                                            c.config.horizon));

  std::vector<std::int64_t> horizons =
      geometric_horizons(std::min<std::int64_t>(10, c.config.horizon),
                         c.config.horizon);
  std::vector<double> thetas;
  for (int k = 1; k <= 19; ++k) thetas.push_back(0.05 * k);
  thetas.push_back(c.config.theta);
  std::sort(thetas.begin(), thetas.end());
  thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

  FrequencyReport rep =
      frequency_report(c.map, c.config.ensemble, c.p, horizons, thetas);
  CsvBuilder csv({"horizon", "theta", "fraction"});
  for (std::size_t i = 0; i < rep.horizons.size(); ++i) {
    for (std::size_t t = 0; t < rep.theta_grid.size(); ++t) {
      csv.add_row({csv.cell(rep.horizons[i]), csv.cell(rep.theta_grid[t]),
                   csv.cell(rep.fraction_at[i][t])});
    }
  }
  c.artifact("frequency.csv", csv.str());

  auto it = std::find(rep.theta_grid.begin(), rep.theta_grid.end(), c.config.theta);
  double coverage = 0.0;
  if (it != rep.theta_grid.end() && !rep.fraction_at.empty()) {
    coverage = rep.fraction_at.back()[static_cast<std::size_t>(
        it - rep.theta_grid.begin())];
  }
  c.entry("frequency_coverage_at_theta", coverage, 0.95, ">=");
}

void run_firsttime(Ctx& c) {
  EnsembleSpec ens{c.config.ensemble.kind, c.config.firsttime_size,
                   c.config.ensemble.seed + kSeedFirsttime};
  FirstTimeDistribution dist =
      first_time_distribution(c.map, ens, c.p, c.config.horizon);
  TailReport tail = tail_report(dist, c.config.ensemble.seed + kSeedBootstrap);

  CsvBuilder hist({"k", "count"});
  for (const auto& [k, cnt] : dist.histogram) {
    hist.add_row({hist.cell(k), hist.cell(cnt)});
  }
  c.artifact("firsttime_hist.csv", hist.str());

  CsvBuilder surv({"n", "survival"});
  CsvBuilder mean({"n", "truncated_mean"});
  for (std::size_t i = 0; i < tail.schedule.size(); ++i) {
    surv.add_row({surv.cell(tail.schedule[i]), surv.cell(tail.survival[i])});
    mean.add_row({mean.cell(tail.schedule[i]), mean.cell(tail.truncated_mean[i])});
  }
  c.artifact("survival.csv", surv.str());
  c.artifact("truncated_mean.csv", mean.str());

  // Divergence shows in the tail, so the growth gate covers the last two
  // decades only; earlier decades measure the bulk and are reported in the
  // truncated-mean schedule instead.
  std::vector<std::int64_t> decades;
  std::int64_t lo = std::max<std::int64_t>(10, c.config.horizon / 100);
  for (std::int64_t n = c.config.horizon; n >= lo; n /= 10) decades.push_back(n);
  std::reverse(decades.begin(), decades.end());
  if (decades.size() >= 2) {
    double min_ratio = 1e300;
    for (std::size_t i = 1; i < decades.size(); ++i) {
      double lo = dist.truncated_mean(decades[i - 1]);
      double hi = dist.truncated_mean(decades[i]);
      min_ratio = std::min(min_ratio, lo > 0.0 ? hi / lo : 0.0);
    }
    c.entry("firsttime_mean_growth_min_ratio", min_ratio, 1.10, ">=");
  }
  // The fitted tail exponent is diagnostic output, not a gate: with a heavy
  // tail the fit window holds few distinct values at moderate ensemble sizes,
  // and the estimate is only meaningful when fit_ok is set.
  CsvBuilder fit({"key", "value"});
  fit.add_row({"slope", fit.cell(tail.slope)});
  fit.add_row({"slope_ci_lo", fit.cell(tail.slope_ci_lo)});
  fit.add_row({"slope_ci_hi", fit.cell(tail.slope_ci_hi)});
  fit.add_row({"fit_points", fit.cell(tail.fit_points)});
  fit.add_row({"fit_ok", fit.cell(static_cast<std::int64_t>(tail.fit_ok ? 1 : 0))});
  fit.add_row({"censored", fit.cell(dist.censored)});
  fit.add_row({"sample_size", fit.cell(dist.sample_size)});
  c.artifact("tail_fit.csv", fit.str());
}

void run_ulam(Ctx& c) {
  const int K = c.config.ulam_k;
  UlamOperator P = c.map.name() == "intermittent"
                       ? build_ulam_exact(intermittent_map(), K)
                       : build_ulam_sampled(c.map, K, 256,
                                            c.config.ensemble.seed + kSeedTransfer);

  std::vector<double> uniform(static_cast<std::size_t>(K), 1.0 / K);
  std::vector<double> pushed = P.apply_left(uniform);
  double l1 = 0.0;
  for (int i = 0; i < K; ++i) {
    l1 += std::fabs(pushed[static_cast<std::size_t>(i)] -
                    uniform[static_cast<std::size_t>(i)]);
  }
  c.entry("ulam_uniform_fixed_l1", l1, 1e-10, "<=");

  InvariantDensityResult inv = invariant_density(P);
  double sup_dev = 0.0;
  for (int i = 0; i < K; ++i) {
    sup_dev = std::max(sup_dev, std::fabs(inv.density.density(i) - 1.0));
  }
  c.entry("ulam_invariant_sup_dev", sup_dev, 0.02, "<=");

  CsvBuilder csv({"cell_index", "left_endpoint", "value"});
  for (int i = 0; i < K; ++i) {
    csv.add_row({csv.cell(static_cast<std::int64_t>(i)),
                 csv.cell(-1.0 + 2.0 * i / K), csv.cell(inv.density.density(i))});
  }
  c.artifact("ulam_density.csv", csv.str());

  EnsembleSpec ens{c.config.ensemble.kind, c.config.pushforward_size,
                   c.config.ensemble.seed + kSeedPushforward};
  std::vector<EmpiricalDensity> dens = pushforward_restricted(
      c.map, ens, c.p, c.config.pushforward_ns, c.config.pushforward_k);
  double sup_max = 0.0;
  double mass_min = 1e300;
  for (std::size_t q = 0; q < dens.size(); ++q) {
    sup_max = std::max(sup_max, dens[q].sup_density());
    mass_min = std::min(mass_min, dens[q].total_mass());
    CsvBuilder pf({"cell_index", "left_endpoint", "value"});
    for (int i = 0; i < dens[q].K; ++i) {
      pf.add_row({pf.cell(static_cast<std::int64_t>(i)),
                  pf.cell(-1.0 + 2.0 * i / dens[q].K), pf.cell(dens[q].density(i))});
    }
    c.artifact("pushforward_n" + std::to_string(c.config.pushforward_ns[q]) + ".csv",
               pf.str());
  }
  c.entry("pushforward_sup_density", sup_max, kPushforwardSupBound, "<=");
  c.entry("pushforward_min_mass", mass_min, kPushforwardMinMass, ">=");
}

double moment_closed_form(int p) {
  // integral of |log dist|^p over the circle against normalized Lebesgue,
  // exceptional set {0, +-1}: p! sum_{k=0}^p (log 2)^k / k!.
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= p; ++k) {
    term *= std::log(2.0) / k;
    sum += term;
  }
  double fact = 1.0;
  for (int k = 2; k <= p; ++k) fact *= k;
  return fact * sum;
}

void run_verify(Ctx& c) {
  const bool intermittent = c.map.name() == "intermittent";

  {
    EnsembleSpec ens{EnsembleSpec::Kind::kRandom, 64,
                     c.config.ensemble.seed + kSeedEquivalence};
    std::int64_t hor = std::min<std::int64_t>(c.config.horizon, 2000);
    std::int64_t mismatches = 0;
    for (CirclePoint x0 : ensemble_points(ens)) {
      OrbitTrace trace;
      try {
        trace = generate_orbit(c.map, x0, hor, c.p.delta);
      } catch (const PartialTraceError&) {
        continue;
      } catch (const std::invalid_argument&) {
        continue;
      }
      if (detect_brute(trace, c.p).times != detect_fast(trace, c.p).times) {
        mismatches += 1;
      }
    }
    c.entry("detector_equivalence_mismatches", static_cast<double>(mismatches), 0.0,
            "<=");
  }

  if (intermittent) {
    const IntermittentCircleMap& imap = intermittent_map();
    auto one = [](CirclePoint) { return 1.0; };
    double worst = 0.0;
    std::vector<CirclePoint> pts =
        ensemble_points({EnsembleSpec::Kind::kGrid, 4096, 0});
    std::vector<CirclePoint> rnd = ensemble_points(
        {EnsembleSpec::Kind::kRandom, 1024, c.config.ensemble.seed + kSeedTransfer});
    pts.insert(pts.end(), rnd.begin(), rnd.end());
    for (CirclePoint x : pts) {
      if (x.coord == -1.0) continue;  // both branch images collapse to S here
      worst = std::max(worst, std::fabs(transfer_apply(imap, one, x) - 1.0));
    }
    c.entry("transfer_identity_max_abs_dev", worst, 1e-12, "<=");
  }

  {
    IntegralEstimate quad = lyapunov_integral_quadrature(c.map, 1e-9);
    double expected = intermittent ? -0.5 : -std::log(2.0);
    c.entry("lyapunov_quadrature_abs_error", std::fabs(quad.value - expected), 1e-6,
            "<=");
    EnsembleSpec ens{EnsembleSpec::Kind::kRandom, c.config.lyapunov_ensemble_size,
                     c.config.ensemble.seed + kSeedLyapunov};
    EnsembleMean em = lyapunov_integral_ensemble(c.map, ens, c.config.horizon);
    c.entry("lyapunov_ensemble_gap", std::fabs(em.mean - quad.value), 0.02, "<=");
    CsvBuilder csv({"method", "value"});
    csv.add_row({"quadrature", csv.cell(quad.value)});
    csv.add_row({"quadrature_coarse", csv.cell(quad.coarse_value)});
    csv.add_row({"ensemble", csv.cell(em.mean)});
    c.artifact("lyapunov.csv", csv.str());
  }

  {
    CsvBuilder csv({"p", "value", "coarse_value", "reference", "abs_error"});
    double higher_rel = 0.0;
    for (int p : {1, 2, 4, 8}) {
      IntegralEstimate est = log_dist_moment(c.map, p);
      double ref = intermittent ? moment_closed_form(p) : 0.0;
      double err = std::fabs(est.value - ref);
      csv.add_row({csv.cell(static_cast<std::int64_t>(p)), csv.cell(est.value),
                   csv.cell(est.coarse_value), csv.cell(ref), csv.cell(err)});
      if (p == 1) {
        c.entry("moment_p1_abs_error", err, 1e-6, "<=");
      } else {
        higher_rel = std::max(higher_rel, err / std::max(1.0, std::fabs(ref)));
      }
    }
    c.entry("moment_higher_max_rel_error", higher_rel, 1e-6, "<=");
    c.artifact("moments.csv", csv.str());
  }

  {
    CsvBuilder csv({"x1", "final_partial_sum", "final_growth_ratio",
                    "upper_bound_ok", "increment_bound_ok", "harmonic_bound_ok",
                    "max_increment_identity_error"});
    std::int64_t upper_fail = 0, inc_fail = 0, harm_fail = 0;
    double max_identity = 0.0;
    double min_ratio = 1e300;
    std::vector<double> starts = {0.25};  // canonical start, then a sweep of (0, 1/2)
    for (int i = 0; i < c.config.sequence_grid; ++i) {
      starts.push_back(0.5 * (i + 0.5) / c.config.sequence_grid);
    }
    for (double x1 : starts) {
      RecurrenceSequenceReport rep = recurrence_sequence_report(x1, c.config.sequence_n);
      upper_fail += rep.upper_bound_ok ? 0 : 1;
      inc_fail += rep.increment_bound_ok ? 0 : 1;
      harm_fail += rep.harmonic_bound_ok ? 0 : 1;
      max_identity = std::max(max_identity, rep.max_increment_identity_error);
      min_ratio = std::min(min_ratio, rep.final_growth_ratio);
      csv.add_row({csv.cell(x1), csv.cell(rep.final_partial_sum),
                   csv.cell(rep.final_growth_ratio),
                   csv.cell(static_cast<std::int64_t>(rep.upper_bound_ok ? 1 : 0)),
                   csv.cell(static_cast<std::int64_t>(rep.increment_bound_ok ? 1 : 0)),
                   csv.cell(static_cast<std::int64_t>(rep.harmonic_bound_ok ? 1 : 0)),
                   csv.cell(rep.max_increment_identity_error)});
    }
    c.entry("sequence_upper_bound_failures", static_cast<double>(upper_fail), 0.0,
            "<=");
    c.entry("sequence_max_increment_identity_error", max_identity, 1e-14, "<=");
    c.entry("sequence_increment_bound_failures", static_cast<double>(inc_fail), 0.0,
            "<=");
    c.entry("sequence_harmonic_bound_failures", static_cast<double>(harm_fail), 0.0,
            "<=");
    c.entry("sequence_min_growth_ratio", min_ratio, 0.0625, ">=");
    c.artifact("sequence.csv", csv.str());
  }

  {
    std::vector<std::int64_t> ks;
    for (int k = 1; k <= c.config.slow_recurrence_kmax; ++k) ks.push_back(k);
    std::vector<double> deltas = slow_recurrence_schedule(c.map, ks);
    EnsembleSpec ens{EnsembleSpec::Kind::kRandom, c.config.slow_recurrence_size,
                     c.config.ensemble.seed + kSeedSlowRecurrence};
    SlowRecurrenceProfile prof =
        slow_recurrence_profile(c.map, ens, ks, deltas, c.config.horizon);
    double excess = -1e300;
    CsvBuilder csv({"k", "delta", "mass", "bound"});
    for (std::size_t q = 0; q < ks.size(); ++q) {
      excess = std::max(excess, prof.mass[q] - prof.bound[q]);
      csv.add_row({csv.cell(ks[q]), csv.cell(prof.delta_k[q]), csv.cell(prof.mass[q]),
                   csv.cell(prof.bound[q])});
    }
    c.entry("slow_recurrence_excess_mass", excess, 0.0, "<=");
    c.artifact("slowrec.csv", csv.str());
  }

  {
    EnsembleSpec ens{EnsembleSpec::Kind::kRandom, c.config.contraction_targets,
                     c.config.ensemble.seed + kSeedContraction};
    std::int64_t contraction_violations = 0, pairs_checked = 0;
    std::int64_t birkhoff_violations = 0;
    double max_log_ratio = 0.0;
    CsvBuilder csv({"orbit_index", "x0", "times_checked", "pairs_checked",
                    "pairs_discarded", "contraction_violations", "worst_margin",
                    "max_log_ratio"});
    std::vector<CirclePoint> pts = ensemble_points(ens);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      OrbitTrace trace;
      try {
        trace = generate_orbit(c.map, pts[i], c.config.contraction_n_max, c.p.delta);
      } catch (const PartialTraceError&) {
        continue;
      } catch (const std::invalid_argument&) {
        continue;
      }
      DetectionResult det = detect_fast(trace, c.p);
      ContractionReport crep =
          contraction_check(c.map, trace, det, c.p, c.config.contraction_n_max);
      DistortionReport drep =
          distortion_check(c.map, trace, det, c.p, c.config.contraction_n_max);
      BirkhoffNegativityReport brep = birkhoff_negativity(trace, det, c.p);
      contraction_violations += crep.violations;
      pairs_checked += crep.pairs_checked;
      birkhoff_violations += brep.violations;
      max_log_ratio = std::max(max_log_ratio, drep.max_log_ratio);
      csv.add_row({csv.cell(static_cast<std::int64_t>(i)), csv.cell(pts[i].coord),
                   csv.cell(brep.times_checked), csv.cell(crep.pairs_checked),
                   csv.cell(crep.pairs_discarded), csv.cell(crep.violations),
                   csv.cell(crep.worst_margin), csv.cell(drep.max_log_ratio)});
    }
    c.entry("contraction_violations", static_cast<double>(contraction_violations),
            0.0, "<=");
    c.entry("contraction_pairs_checked", static_cast<double>(pairs_checked), 1.0,
            ">=");
    c.entry("distortion_c1_hat", std::exp(max_log_ratio), kDistortionBound, "<=");
    c.entry("birkhoff_negativity_violations", static_cast<double>(birkhoff_violations),
            0.0, "<=");
    c.artifact("contraction.csv", csv.str());
  }
}

void run_report(Ctx& c) {
  EnsembleSpec ens{EnsembleSpec::Kind::kRandom, 16,
                   c.config.ensemble.seed + kSeedRerun};
  std::int64_t hor = std::min<std::int64_t>(c.config.horizon, 1000);
  std::string first = build_detect_csv(c.map, c.p, ens, hor);
  std::string second = build_detect_csv(c.map, c.p, ens, hor);
  c.entry("rerun_byte_identical", first == second ? 1.0 : 0.0, 1.0, ">=");

  json j;
  j["map"] = c.config.map_name;
  j["params"] = {{"sigma", c.config.sigma},
                 {"delta", c.config.delta},
                 {"b", c.config.b},
                 {"beta", c.config.beta},
                 {"theta", c.config.theta},
                 {"horizon", c.config.horizon}};
  j["ensemble"] = {
      {"kind", c.config.ensemble.kind == EnsembleSpec::Kind::kGrid ? "grid" : "random"},
      {"size", c.config.ensemble.size},
      {"seed", c.config.ensemble.seed}};
  json entries = json::array();
  int failures = 0;
  for (const SummaryEntry& e : c.result.summary) {
    entries.push_back({{"name", e.name},
                       {"measured", e.measured},
                       {"threshold", e.threshold},
                       {"relation", e.relation},
                       {"pass", e.pass}});
    if (!e.pass) failures += 1;
  }
  j["entries"] = entries;
  json arts = json::array();
  for (const std::filesystem::path& a : c.result.artifacts) {
    arts.push_back(a.filename().string());
  }
  j["artifacts"] = arts;
  j["failures"] = failures;
  c.artifact("summary.json", j.dump(2) + "\n");
}

}  // namespace

RunResult run_config(const ExperimentConfig& config) {
  const MapSystem& map = map_by_name(config.map_name);
  HyperbolicParams p = config.params();
  std::filesystem::path outdir = config.output_dir;
  if (const char* env = std::getenv(kOutputDirEnvVar); env != nullptr && *env != '\0') {
    outdir = env;
  }
  std::filesystem::create_directories(outdir);

  Ctx ctx{config, map, p, outdir, {}};
  for (const std::string& name : config.experiments) {
    if (name != "detect" && name != "firsttime" && name != "ulam" &&
        name != "verify" && name != "report") {
      throw std::invalid_argument("unknown experiment: " + name);
    }
    try {
      if (name == "detect") {
        run_detect(ctx);
      } else if (name == "firsttime") {
        run_firsttime(ctx);
      } else if (name == "ulam") {
        run_ulam(ctx);
      } else if (name == "verify") {
        run_verify(ctx);
      } else {
        run_report(ctx);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("experiment '" + name + "': " + e.what());
    }
  }
  for (const SummaryEntry& e : ctx.result.summary) {
    if (!e.pass) ctx.result.failures += 1;
  }
  return ctx.result;
}

}  // namespace hyptimes
