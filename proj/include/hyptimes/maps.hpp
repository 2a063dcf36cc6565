#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyptimes/circle.hpp"

namespace hyptimes {

// Piecewise-smooth circle map together with the observables the detector
// needs.  S is the finite exceptional set where the map fails to be a C^2
// local diffeomorphism (branch endpoints, critical/singular points).
class MapSystem {
 public:
  virtual ~MapSystem() = default;

  virtual CirclePoint eval(CirclePoint x) const = 0;

  // log ||Df(x)^{-1}|| ; in one dimension this is -log |f'(x)|.
  virtual double log_inv_deriv_norm(CirclePoint x) const = 0;

  // log |det Df(x)| = log |f'(x)|.
  virtual double log_abs_det(CirclePoint x) const = 0;

  // Geodesic distance to S; identically 1 when S is empty.
  virtual double dist_to_S(CirclePoint x) const = 0;

  virtual std::vector<CirclePoint> exceptional_set() const = 0;

  // Preimage of y under the inverse branch whose image region contains
  // branch_ref.  Used to pull pairs back along a recorded orbit.
  virtual CirclePoint pullback(CirclePoint y, CirclePoint branch_ref) const = 0;

  virtual std::string_view name() const = 0;
};

// f(x) = 2 sqrt(x) - 1 on [0,1), 1 - 2 sqrt(|x|) on [-1,0).
// |f'(x)| = |x|^{-1/2}: neutral fixed point at the circle point +-1,
// unbounded derivative at 0.  S = {0, +-1}.  Lebesgue (dx/2) is invariant.
class IntermittentCircleMap final : public MapSystem {
 public:
  CirclePoint eval(CirclePoint x) const override;
  double log_inv_deriv_norm(CirclePoint x) const override;
  double log_abs_det(CirclePoint x) const override;
  double dist_to_S(CirclePoint x) const override;
  std::vector<CirclePoint> exceptional_set() const override;
  CirclePoint pullback(CirclePoint y, CirclePoint branch_ref) const override;
  std::string_view name() const override { return "intermittent"; }

  // Increasing inverse branches: g1 into (0,1), g2 into (-1,0).
  // g1(x) = ((1+x)/2)^2, g2(x) = -((1-x)/2)^2.  Rejects the coordinate -1
  // (the circle point +-1), where both branches collapse to S.
  std::pair<CirclePoint, CirclePoint> inverse_branches(CirclePoint x) const;
};

// f(x) = 2x mod 2, uniformly expanding, S empty.  Baseline where every
// hyperbolic-time statistic is known in closed form.
class DoublingBaselineMap final : public MapSystem {
 public:
  CirclePoint eval(CirclePoint x) const override;
  double log_inv_deriv_norm(CirclePoint x) const override;
  double log_abs_det(CirclePoint x) const override;
  double dist_to_S(CirclePoint x) const override;
  std::vector<CirclePoint> exceptional_set() const override;
  CirclePoint pullback(CirclePoint y, CirclePoint branch_ref) const override;
  std::string_view name() const override { return "doubling"; }
};

// Static instances; maps are stateless.
const MapSystem& map_by_name(const std::string& name);
const IntermittentCircleMap& intermittent_map();
const DoublingBaselineMap& doubling_map();

struct NonDegeneracyEstimate {
  double B_hat = 0.0;
  double beta_hat = 0.0;
  double zeta_hat = 0.0;     // sup |log ||Df^{-1}|| | / |log dist(.,S)| near S
  int grid_points = 0;
  // Worst-case slack of the three fitted inequalities over the probe grid,
  // in log scale; >= 0 means (B_hat, beta_hat) is feasible on the grid.
  double residual_power_bounds = 0.0;   // (1/B) d^beta <= |f'| <= B d^{-beta}
  double residual_log_deriv_lip = 0.0;  // Lipschitz bound on log ||Df^{-1}||
  double residual_log_det_lip = 0.0;    // Lipschitz bound on log |det Df|
};

// Probes the non-degeneracy of f near S on two-sided log-spaced grids:
// beta_hat from the log-log slope of |f'| against dist(.,S), B_hat as the
// smallest constant making all three inequalities hold on the grid.
// Pair probes sit at dist(x,y) = dist(x,S)/4.  Throws if S is empty.
NonDegeneracyEstimate probe_nondegeneracy(const MapSystem& map,
                                          int points_per_side = 64,
                                          double dist_min = 1e-8,
                                          double dist_max = 0.1);

}  // namespace hyptimes
