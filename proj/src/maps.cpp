#include "hyptimes/maps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyptimes {

namespace {

void require_finite(CirclePoint x) {
  if (!std::isfinite(x.coord) || x.coord < -1.0 || x.coord >= 1.0) {
    throw std::invalid_argument("coordinate outside [-1,1)");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// IntermittentCircleMap

CirclePoint IntermittentCircleMap::eval(CirclePoint x) const {
  require_finite(x);
  double v = x.coord >= 0.0 ? 2.0 * std::sqrt(x.coord) - 1.0
                            : 1.0 - 2.0 * std::sqrt(-x.coord);
  return wrap(v);
}

double IntermittentCircleMap::log_inv_deriv_norm(CirclePoint x) const {
  require_finite(x);
  // |f'(x)| = |x|^{-1/2}
  return 0.5 * std::log(std::fabs(x.coord));
}

double IntermittentCircleMap::log_abs_det(CirclePoint x) const {
  require_finite(x);
  return -0.5 * std::log(std::fabs(x.coord));
}

double IntermittentCircleMap::dist_to_S(CirclePoint x) const {
  require_finite(x);
  double ax = std::fabs(x.coord);
  return std::min(ax, 1.0 - ax);
}

std::vector<CirclePoint> IntermittentCircleMap::exceptional_set() const {
  return {CirclePoint{-1.0}, CirclePoint{0.0}};
}

std::pair<CirclePoint, CirclePoint> IntermittentCircleMap::inverse_branches(
    CirclePoint x) const {
  require_finite(x);
  if (x.coord == -1.0) {
    throw std::domain_error("inverse_branches: undefined at the circle point +-1");
  }
  double u = (1.0 + x.coord) / 2.0;
  double w = (1.0 - x.coord) / 2.0;
  return {CirclePoint{u * u}, CirclePoint{-(w * w)}};
}

CirclePoint IntermittentCircleMap::pullback(CirclePoint y, CirclePoint branch_ref) const {
  auto [g1, g2] = inverse_branches(y);
  return branch_ref.coord >= 0.0 ? g1 : g2;
}

// ---------------------------------------------------------------------------
// DoublingBaselineMap

CirclePoint DoublingBaselineMap::eval(CirclePoint x) const {
  require_finite(x);
  return wrap(2.0 * x.coord);
}

double DoublingBaselineMap::log_inv_deriv_norm(CirclePoint x) const {
  require_finite(x);
  return -std::log(2.0);
}

double DoublingBaselineMap::log_abs_det(CirclePoint x) const {
  require_finite(x);
  return std::log(2.0);
}

double DoublingBaselineMap::dist_to_S(CirclePoint x) const {
  require_finite(x);
  return 1.0;
}

std::vector<CirclePoint> DoublingBaselineMap::exceptional_set() const { return {}; }

CirclePoint DoublingBaselineMap::pullback(CirclePoint y, CirclePoint branch_ref) const {
  // Branch cells are [-1,0) and [0,1); pick the preimage in the cell of
  // branch_ref.
  double half = y.coord / 2.0;  // preimage in [-1/2, 1/2)
  bool want_right = branch_ref.coord >= 0.0;
  bool have_right = half >= 0.0;
  if (want_right == have_right) return CirclePoint{half};
  return wrap(half + 1.0);
}

// ---------------------------------------------------------------------------

const IntermittentCircleMap& intermittent_map() {
  static const IntermittentCircleMap m;
  return m;
}

const DoublingBaselineMap& doubling_map() {
  static const DoublingBaselineMap m;
  return m;
}

const MapSystem& map_by_name(const std::string& name) {
  if (name == "intermittent") return intermittent_map();
  if (name == "doubling") return doubling_map();
  throw std::invalid_argument("unknown map: " + name);
}

// ---------------------------------------------------------------------------
// Non-degeneracy probe

NonDegeneracyEstimate probe_nondegeneracy(const MapSystem& map, int points_per_side,
                                          double dist_min, double dist_max) {
  auto s_points = map.exceptional_set();
  if (s_points.empty()) {
    throw std::invalid_argument("probe_nondegeneracy: map has empty exceptional set");
  }
  if (points_per_side < 4 || dist_min <= 0.0 || dist_max <= dist_min) {
    throw std::invalid_argument("probe_nondegeneracy: bad grid parameters");
  }

  struct Probe {
    double t;       // log dist(x, S)
    double y;       // log |f'(x)|
    double inv;     // log ||Df(x)^{-1}||
    double pair_u;  // log dist(x, y)
    double d_inv;   // |delta log ||Df^{-1}|| | over the pair
    double d_det;   // |delta log |det Df| | over the pair
  };
  std::vector<Probe> probes;
  double beta_hat = 0.0;

  double ratio = std::pow(dist_max / dist_min, 1.0 / (points_per_side - 1));
  for (CirclePoint s : s_points) {
    // Log-log regression of |f'| against dist, both sides pooled.
    double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (int side = 0; side < 2; ++side) {
      double sign = side == 0 ? 1.0 : -1.0;
      double d = dist_max;
      for (int i = 0; i < points_per_side; ++i, d /= ratio) {
        CirclePoint x = wrap(s.coord + sign * d);
        double dist = map.dist_to_S(x);
        if (dist <= 0.0) continue;  // grid point fell exactly on S
        CirclePoint xp = wrap(s.coord + sign * (d + d / 4.0));
        double u = geo_dist(x, xp);
        double distp = map.dist_to_S(xp);
        if (distp <= 0.0 || u <= 0.0 || u >= dist / 2.0) continue;

        Probe pr;
        pr.t = std::log(dist);
        pr.y = map.log_abs_det(x);
        pr.inv = map.log_inv_deriv_norm(x);
        pr.pair_u = std::log(u);
        pr.d_inv = std::fabs(map.log_inv_deriv_norm(xp) - pr.inv);
        pr.d_det = std::fabs(map.log_abs_det(xp) - pr.y);
        probes.push_back(pr);

        n += 1; st += pr.t; sy += pr.y; stt += pr.t * pr.t; sty += pr.t * pr.y;
      }
    }
    if (n >= 2) {
      double slope = (n * sty - st * sy) / (n * stt - st * st);
      beta_hat = std::max(beta_hat, std::fabs(slope));
    }
  }
  beta_hat = std::max(beta_hat, 1e-6);

  // Smallest log B making each inequality hold on the grid at beta_hat.
  double need_power = std::log(1.0 + 1e-9);
  double need_inv_lip = need_power;
  double need_det_lip = need_power;
  for (const Probe& pr : probes) {
    need_power = std::max(need_power, beta_hat * pr.t + std::fabs(pr.y));
    if (pr.d_inv > 0.0) {
      need_inv_lip =
          std::max(need_inv_lip, std::log(pr.d_inv) - pr.pair_u + beta_hat * pr.t);
    }
    if (pr.d_det > 0.0) {
      need_det_lip =
          std::max(need_det_lip, std::log(pr.d_det) - pr.pair_u + beta_hat * pr.t);
    }
  }
  double log_b = std::max({need_power, need_inv_lip, need_det_lip});

  NonDegeneracyEstimate est;
  est.B_hat = std::exp(log_b);
  est.beta_hat = beta_hat;
  est.grid_points = static_cast<int>(probes.size());

  double res1 = 1e300, res2 = 1e300, res3 = 1e300, zeta = 0.0;
  for (const Probe& pr : probes) {
    res1 = std::min(res1, log_b - (beta_hat * pr.t + std::fabs(pr.y)));
    if (pr.d_inv > 0.0) {
      res2 = std::min(res2, log_b - (std::log(pr.d_inv) - pr.pair_u + beta_hat * pr.t));
    }
    if (pr.d_det > 0.0) {
      res3 = std::min(res3, log_b - (std::log(pr.d_det) - pr.pair_u + beta_hat * pr.t));
    }
    if (pr.t <= std::log(0.25)) {
      zeta = std::max(zeta, std::fabs(pr.inv) / std::fabs(pr.t));
    }
  }
  est.residual_power_bounds = res1;
  est.residual_log_deriv_lip = res2;
  est.residual_log_det_lip = res3;
  est.zeta_hat = zeta;
  return est;
}

}  // namespace hyptimes
